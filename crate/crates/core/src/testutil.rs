use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gmm::GmmState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two unit-variance 2-D blobs `sep` apart; returns data, labels, means.
pub fn blobs(per: usize, sep: f64, seed: u64) -> (DMatrix<f64>, Vec<usize>, [[f64; 2]; 2]) {
    let mut r = rng(seed);
    let means = [[0.0, 0.0], [sep, 0.0]];
    let n = 2 * per;
    let labels: Vec<usize> = (0..n).map(|i| i / per).collect();
    let data = DMatrix::from_fn(n, 2, |i, j| {
        let z: f64 = StandardNormal.sample(&mut r);
        means[labels[i]][j] + z
    });
    (data, labels, means)
}

pub fn uniform_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, d, |_, _| r.random::<f64>() * 4.0 - 2.0)
}

/// Row-stochastic `n × k` matrix with strictly positive entries.
pub fn random_resp(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let mut m = DMatrix::from_fn(n, k, |_, _| 0.05 + r.random::<f64>());
    for i in 0..n {
        let s: f64 = m.row(i).sum();
        for j in 0..k {
            m[(i, j)] /= s;
        }
    }
    m
}

/// Arbitrary valid 2-D state with `k` components.
pub fn random_state(k: usize, seed: u64) -> GmmState {
    let mut r = rng(seed);
    let alpha = DVector::from_fn(k, |_, _| 0.5 + 3.0 * r.random::<f64>());
    let lambda = DVector::from_fn(k, |_, _| 0.5 + 3.0 * r.random::<f64>());
    let nu = DVector::from_fn(k, |_, _| 2.5 + 4.0 * r.random::<f64>());
    let m = DMatrix::from_fn(2, k, |_, _| r.random::<f64>() * 2.0 - 1.0);
    let w: Vec<DMatrix<f64>> = (0..k)
        .map(|_| {
            let a = 0.3 + r.random::<f64>();
            let c = 0.3 + r.random::<f64>();
            let b = (r.random::<f64>() - 0.5) * 0.5 * (a * c).sqrt();
            DMatrix::from_row_slice(2, 2, &[a, b, b, c])
        })
        .collect();
    let log_det_w = w.iter().map(|w| (w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)]).ln()).collect();
    let total: f64 = alpha.iter().sum();
    GmmState {
        mixing_weights: &alpha / total,
        alpha,
        lambda,
        m,
        w,
        log_det_w,
        nu,
        degenerate_components: Vec::new(),
    }
}

pub fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}
