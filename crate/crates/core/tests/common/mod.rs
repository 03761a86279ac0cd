#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ln_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Gaussian blobs with unit variance centred on `centers`, `sizes[c]` rows each.
pub fn blobs(centers: &[[f64; 2]], sizes: &[usize], seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let mut rng = rng(seed);
    let n: usize = sizes.iter().sum();
    let mut data = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, (&center, &size)) in centers.iter().zip(sizes).enumerate() {
        for _ in 0..size {
            for j in 0..2 {
                let z: f64 = StandardNormal.sample(&mut rng);
                data[(row, j)] = center[j] + z;
            }
            labels.push(c);
            row += 1;
        }
    }
    (data, labels)
}

/// `n` rows of `[1, x]` with `x ~ N(0, 1)` and `y ~ Bernoulli(expit(b0 + b1 x))`.
pub fn logistic_data(n: usize, b0: f64, b1: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = rng(seed);
    let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y = xs
        .iter()
        .map(|&x| f64::from(u8::from(rng.random::<f64>() < expit(b0 + b1 * x))))
        .collect();
    (DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] }), y)
}

/// Binary indicator with the given sensitivity and specificity against `d`.
pub fn indicator(d: &[f64], sens: f64, spec: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    d.iter()
        .map(|&di| {
            let p = if di == 1.0 { sens } else { 1.0 - spec };
            f64::from(u8::from(rng.random::<f64>() < p))
        })
        .collect()
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Posterior mean of a two-coefficient logistic model with an `N(0, v·I)`
/// prior, by nested adaptive Simpson quadrature on `[-lim, lim]²`.
pub fn logit_quadrature_mean(x: &DMatrix<f64>, y: &[f64], v: f64, lim: f64) -> [f64; 2] {
    let log_post = |b0: f64, b1: f64| {
        let mut lp = -(b0 * b0 + b1 * b1) / (2.0 * v);
        for i in 0..x.nrows() {
            let eta = b0 * x[(i, 0)] + b1 * x[(i, 1)];
            lp += if y[i] == 1.0 { ln_expit(eta) } else { ln_expit(-eta) };
        }
        lp
    };
    let mut peak = f64::NEG_INFINITY;
    for a in -200..=200 {
        for b in -200..=200 {
            peak = peak.max(log_post(lim * a as f64 / 200.0, lim * b as f64 / 200.0));
        }
    }
    let moment = |which: usize| {
        let outer = |b0: f64| {
            adaptive_simpson(
                &|b1: f64| {
                    let w = (log_post(b0, b1) - peak).exp();
                    match which {
                        0 => w,
                        1 => b0 * w,
                        _ => b1 * w,
                    }
                },
                -lim,
                lim,
                1e-10,
            )
        };
        adaptive_simpson(&outer, -lim, lim, 1e-9)
    };
    let z = moment(0);
    [moment(1) / z, moment(2) / z]
}

pub struct EmFit {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 2]>,
}

/// Maximum-likelihood EM for a two-dimensional Gaussian mixture with full
/// covariances, started from hard labels.
pub fn em_gmm_2d(data: &DMatrix<f64>, labels: &[usize], k: usize, iters: usize) -> EmFit {
    let n = data.nrows();
    let mut r = vec![vec![0.0; k]; n];
    for (i, &l) in labels.iter().enumerate() {
        r[i][l] = 1.0;
    }
    let mut weights = vec![0.0; k];
    let mut means = vec![[0.0; 2]; k];
    let mut covs = vec![[[0.0; 2]; 2]; k];
    for _ in 0..iters {
        for c in 0..k {
            let nk: f64 = r.iter().map(|ri| ri[c]).sum();
            let mut mu = [0.0; 2];
            for i in 0..n {
                mu[0] += r[i][c] * data[(i, 0)];
                mu[1] += r[i][c] * data[(i, 1)];
            }
            mu = [mu[0] / nk, mu[1] / nk];
            let mut s = [[0.0; 2]; 2];
            for i in 0..n {
                let d = [data[(i, 0)] - mu[0], data[(i, 1)] - mu[1]];
                for a in 0..2 {
                    for b in 0..2 {
                        s[a][b] += r[i][c] * d[a] * d[b];
                    }
                }
            }
            for row in s.iter_mut() {
                for v in row.iter_mut() {
                    *v /= nk;
                }
            }
            weights[c] = nk / n as f64;
            means[c] = mu;
            covs[c] = s;
        }
        for i in 0..n {
            let mut dens = vec![0.0; k];
            for c in 0..k {
                let s = covs[c];
                let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let d = [data[(i, 0)] - means[c][0], data[(i, 1)] - means[c][1]];
                let q = (s[1][1] * d[0] * d[0] - 2.0 * s[0][1] * d[0] * d[1] + s[0][0] * d[1] * d[1]) / det;
                dens[c] = weights[c] * (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
            }
            let total: f64 = dens.iter().sum();
            for c in 0..k {
                r[i][c] = dens[c] / total;
            }
        }
    }
    EmFit { weights, means }
}
