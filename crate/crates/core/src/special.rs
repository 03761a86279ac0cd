//! Scalar special functions used by the variational bounds.

use std::f64::consts::PI;

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Multivariate log-gamma `ln Γ_D(a)`.
pub fn ln_multigamma(a: f64, dim: usize) -> f64 {
    let d = dim as f64;
    d * (d - 1.0) / 4.0 * PI.ln()
        + (1..=dim)
            .map(|i| ln_gamma(a + (1.0 - i as f64) / 2.0))
            .sum::<f64>()
}

/// Log normalizer `ln C(α)` of the Dirichlet distribution.
pub fn ln_dirichlet_norm(alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    ln_gamma(total) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>()
}

/// Log normalizer `ln B(W, ν)` of the Wishart distribution, given `ln|W|`.
pub fn ln_wishart_norm(log_det_w: f64, nu: f64, dim: usize) -> f64 {
    let d = dim as f64;
    -0.5 * nu * log_det_w - 0.5 * nu * d * 2f64.ln() - ln_multigamma(0.5 * nu, dim)
}

/// `E[ln |Λ|]` under `W(Λ | W, ν)`.
pub fn wishart_expected_log_det(log_det_w: f64, nu: f64, dim: usize) -> f64 {
    (1..=dim)
        .map(|i| digamma(0.5 * (nu + 1.0 - i as f64)))
        .sum::<f64>()
        + dim as f64 * 2f64.ln()
        + log_det_w
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln σ(x)`.
pub fn ln_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Log-sum-exp over a slice; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
