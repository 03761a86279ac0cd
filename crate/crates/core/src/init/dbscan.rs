use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;

use super::sq_dist_rows;
use crate::par;

/// Above this many rows (and for at most three dimensions) neighbourhood
/// queries go through a uniform grid instead of a full scan.
pub const GRID_INDEX_THRESHOLD: usize = 50_000;

/// Output of density clustering before any merge to `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawClustering {
    /// `None` marks noise.
    pub labels: Vec<Option<usize>>,
    pub cluster_count: usize,
    pub core: Vec<bool>,
}

impl RawClustering {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for l in self.labels.iter().flatten() {
            sizes[*l] += 1;
        }
        sizes
    }
}

trait Neighbourhood: Sync {
    /// Rows within `eps` of row `i` (inclusive), `i` itself included.
    fn query(&self, i: usize) -> Vec<usize>;
    fn count(&self, i: usize) -> usize {
        self.query(i).len()
    }
}

struct BruteForce<'a> {
    data: &'a DMatrix<f64>,
    eps2: f64,
}

impl Neighbourhood for BruteForce<'_> {
    fn query(&self, i: usize) -> Vec<usize> {
        (0..self.data.nrows())
            .filter(|&j| sq_dist_rows(self.data, i, j) <= self.eps2)
            .collect()
    }

    fn count(&self, i: usize) -> usize {
        (0..self.data.nrows())
            .filter(|&j| sq_dist_rows(self.data, i, j) <= self.eps2)
            .count()
    }
}

struct Grid<'a> {
    data: &'a DMatrix<f64>,
    eps: f64,
    eps2: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(data: &'a DMatrix<f64>, eps: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for i in 0..data.nrows() {
            cells.entry(cell_of(data, i, eps)).or_default().push(i);
        }
        Self {
            data,
            eps,
            eps2: eps * eps,
            cells,
        }
    }
}

fn cell_of(data: &DMatrix<f64>, i: usize, eps: f64) -> Vec<i64> {
    (0..data.ncols())
        .map(|t| (data[(i, t)] / eps).floor() as i64)
        .collect()
}

impl Neighbourhood for Grid<'_> {
    fn query(&self, i: usize) -> Vec<usize> {
        let home = cell_of(self.data, i, self.eps);
        let d = home.len();
        let mut out = Vec::new();
        let mut offset = vec![-1i64; d];
        loop {
            let key: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
            if let Some(members) = self.cells.get(&key) {
                out.extend(
                    members
                        .iter()
                        .copied()
                        .filter(|&j| sq_dist_rows(self.data, i, j) <= self.eps2),
                );
            }
            // odometer over {-1, 0, 1}^d
            let mut t = 0;
            while t < d && offset[t] == 1 {
                offset[t] = -1;
                t += 1;
            }
            if t == d {
                break;
            }
            offset[t] += 1;
        }
        out.sort_unstable();
        out
    }
}

/// Density-based clustering.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within Euclidean distance `eps`, boundary inclusive. Clusters are the
/// connected components of core points under the `eps` relation, numbered
/// in order of their lowest row index. A non-core point joins the cluster
/// of its nearest core neighbour (lowest row index on exact ties) and is
/// noise when it has none.
pub fn init_dbscan(data: &DMatrix<f64>, eps: f64, min_pts: usize) -> RawClustering {
    let use_grid = data.nrows() > GRID_INDEX_THRESHOLD && data.ncols() <= 3;
    dbscan_with(data, eps, min_pts, use_grid)
}

pub(crate) fn dbscan_with(data: &DMatrix<f64>, eps: f64, min_pts: usize, use_grid: bool) -> RawClustering {
    if use_grid {
        run(data, min_pts, &Grid::new(data, eps))
    } else {
        run(
            data,
            min_pts,
            &BruteForce {
                data,
                eps2: eps * eps,
            },
        )
    }
}

fn run<N: Neighbourhood>(data: &DMatrix<f64>, min_pts: usize, index: &N) -> RawClustering {
    let n = data.nrows();
    let core: Vec<bool> = par::map_indexed(n, |i| index.count(i) >= min_pts);

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut cluster_count = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        let c = cluster_count;
        cluster_count += 1;
        labels[seed] = Some(c);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for q in index.query(p) {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(c);
                    queue.push_back(q);
                }
            }
        }
    }

    let border: Vec<Option<usize>> = par::map_indexed(n, |i| {
        if core[i] {
            return labels[i];
        }
        let mut best: Option<(f64, usize)> = None;
        for j in index.query(i) {
            if !core[j] {
                continue;
            }
            let dist = sq_dist_rows(data, i, j);
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, j));
            }
        }
        best.and_then(|(_, j)| labels[j])
    });

    RawClustering {
        labels: border,
        cluster_count,
        core,
    }
}
