use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{centroids_of, sq_dist_to_col, Assignment};
use crate::par;
use crate::{Error, Result};

pub const MAX_LLOYD_ITERS: usize = 300;
/// Independent k-means++ restarts; the run with the lowest inertia wins.
pub const KMEANS_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
    pub iterations: usize,
}

/// k-means++ seeding: first centre uniform, then D²-weighted draws.
pub fn kmeans_plus_plus<R: Rng>(data: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let n = data.nrows();
    let d = data.ncols();
    let mut centres = DMatrix::zeros(d, k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centres.set_column(0, &data.row(first).transpose());
    let mut best: Vec<f64> = (0..n).map(|i| sq_dist_to_col(data, i, &centres, 0)).collect();

    for c in 1..k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in best.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| best.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // Every remaining point coincides with a centre.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centres.set_column(c, &data.row(pick).transpose());
        for (i, b) in best.iter_mut().enumerate() {
            let dist = sq_dist_to_col(data, i, &centres, c);
            if dist < *b {
                *b = dist;
            }
        }
    }
    centres
}

fn assign(data: &DMatrix<f64>, centres: &DMatrix<f64>) -> Vec<(usize, f64)> {
    let k = centres.ncols();
    par::map_indexed(data.nrows(), |i| {
        let mut best = (0, sq_dist_to_col(data, i, centres, 0));
        for c in 1..k {
            let dist = sq_dist_to_col(data, i, centres, c);
            if dist < best.1 {
                best = (c, dist);
            }
        }
        best
    })
}

/// Lloyd iterations until the assignment stops changing. Empty clusters keep
/// their previous centre.
pub fn lloyd(data: &DMatrix<f64>, initial: DMatrix<f64>, max_iters: usize) -> KMeansRun {
    let k = initial.ncols();
    let mut centres = initial;
    let mut labels: Vec<usize> = Vec::new();
    let mut iterations = 0;
    loop {
        let assigned = assign(data, &centres);
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let done = new_labels == labels || iterations >= max_iters;
        labels = new_labels;
        if done {
            let inertia = assigned.iter().map(|a| a.1).sum();
            return KMeansRun {
                labels,
                centroids: centres,
                inertia,
                iterations,
            };
        }
        iterations += 1;
        let (means, counts) = centroids_of(data, &labels, k);
        for c in 0..k {
            if counts[c] > 0 {
                centres.set_column(c, &means.column(c));
            }
        }
    }
}

/// Best of [`KMEANS_RESTARTS`] k-means++ / Lloyd runs. Restart `r` uses the
/// seed `seed + r`, so the result depends only on `(data, k, seed)`.
pub fn init_kmeans(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Assignment> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::TooFewObservations { n, k });
    }
    let runs = par::map_indexed(KMEANS_RESTARTS, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let start = kmeans_plus_plus(data, k, &mut rng);
        lloyd(data, start, MAX_LLOYD_ITERS)
    });
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(Assignment::from_labels(data, best.labels, k, k))
}
