use nalgebra::{DMatrix, DVector};

use super::kmeans::{kmeans_plus_plus, lloyd, MAX_LLOYD_ITERS};
use super::{Assignment, RawClustering};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Group {
    members: Vec<usize>,
    centroid: DVector<f64>,
}

impl Group {
    fn new(data: &DMatrix<f64>, members: Vec<usize>) -> Self {
        let centroid = mean_of(data, &members);
        Self { members, centroid }
    }
}

fn mean_of(data: &DMatrix<f64>, members: &[usize]) -> DVector<f64> {
    let mut c = DVector::zeros(data.ncols());
    for &i in members {
        for t in 0..data.ncols() {
            c[t] += data[(i, t)];
        }
    }
    if !members.is_empty() {
        c /= members.len() as f64;
    }
    c
}

fn sq_dist_point(data: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    (0..data.ncols()).map(|t| (data[(i, t)] - c[t]).powi(2)).sum()
}

/// Reduce (or grow) a density clustering to exactly `k` groups.
///
/// More than `k` clusters: repeatedly merge the pair with the nearest
/// centroids (centroid linkage) until `k` remain. Noise points then join the
/// nearest surviving centroid. Fewer than `k`: split the largest group with
/// 2-means until there are `k`. A clustering with no clusters at all is
/// treated as one cluster holding every point.
pub fn merge_to_k(raw: &RawClustering, data: &DMatrix<f64>, k: usize, seed: u64) -> Assignment {
    let n = data.nrows();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); raw.cluster_count];
    let mut noise = Vec::new();
    for (i, l) in raw.labels.iter().enumerate() {
        match l {
            Some(c) => buckets[*c].push(i),
            None => noise.push(i),
        }
    }
    let mut groups: Vec<Group> = buckets.into_iter().map(|m| Group::new(data, m)).collect();
    if groups.is_empty() {
        groups.push(Group::new(data, (0..n).collect()));
        noise.clear();
    }

    while groups.len() > k {
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..groups.len() {
            for b in (a + 1)..groups.len() {
                let dist = (&groups[a].centroid - &groups[b].centroid).norm_squared();
                if dist < best.0 {
                    best = (dist, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let absorbed = groups.remove(b);
        let keep = &mut groups[a];
        keep.members.extend(absorbed.members);
        keep.members.sort_unstable();
        keep.centroid = mean_of(data, &keep.members);
    }

    for &i in &noise {
        let mut best = (f64::INFINITY, 0);
        for (g, group) in groups.iter().enumerate() {
            let dist = sq_dist_point(data, i, &group.centroid);
            if dist < best.0 {
                best = (dist, g);
            }
        }
        groups[best.1].members.push(i);
    }
    for g in &mut groups {
        g.members.sort_unstable();
        g.centroid = mean_of(data, &g.members);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while groups.len() < k {
        let largest = (0..groups.len())
            .max_by(|&a, &b| groups[a].members.len().cmp(&groups[b].members.len()).then(b.cmp(&a)))
            .expect("at least one group");
        let members = std::mem::take(&mut groups[largest].members);
        let (left, right) = split_two(data, &members, &mut rng);
        groups[largest] = Group::new(data, left);
        groups.push(Group::new(data, right));
    }

    let mut labels = vec![0; n];
    for (g, group) in groups.iter().enumerate() {
        for &i in &group.members {
            labels[i] = g;
        }
    }
    Assignment::from_labels(data, labels, k, raw.cluster_count)
}

fn split_two(data: &DMatrix<f64>, members: &[usize], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    if members.len() >= 2 {
        let sub = DMatrix::from_fn(members.len(), data.ncols(), |i, t| data[(members[i], t)]);
        let start = kmeans_plus_plus(&sub, 2, rng);
        let run = lloyd(&sub, start, MAX_LLOYD_ITERS);
        let (left, right): (Vec<_>, Vec<_>) = members
            .iter()
            .zip(&run.labels)
            .partition(|(_, &l)| l == 0);
        if !left.is_empty() && !right.is_empty() {
            return (
                left.into_iter().map(|(&i, _)| i).collect(),
                right.into_iter().map(|(&i, _)| i).collect(),
            );
        }
    }
    // coincident points: split by position in the member list
    let mid = members.len().div_ceil(2);
    (members[..mid].to_vec(), members[mid..].to_vec())
}
