//! Mean-field Bayesian linear regression `y = Xβ + ε`, `ε ~ N(0, τ²)`, with
//! `β ~ N(μ, Σ)` and `τ² ~ InvGamma(c, d)`, factorised as `q(β) q(τ²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{check_design, gaussian_kl, RegressionOptions};
use crate::gmm::{ElboTrace, StopReason};
use crate::linalg;
use crate::special::{digamma, ln_gamma};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinRegPrior {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    log_det_sigma: f64,
    c: f64,
    d: f64,
}

impl LinRegPrior {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, c: f64, d: f64) -> Result<Self> {
        if sigma.nrows() != mu.len() || sigma.ncols() != mu.len() {
            return Err(Error::DimensionMismatch {
                context: "regression prior covariance",
                expected: mu.len(),
                found: sigma.nrows(),
            });
        }
        if !(c > 0.0) || !(d > 0.0) || !c.is_finite() || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse-gamma shape and scale must be positive, got c = {c}, d = {d}"
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression prior mean"));
        }
        let chol = linalg::cholesky(&sigma, "regression prior covariance")?;
        Ok(Self {
            log_det_sigma: linalg::log_det_chol(&chol),
            sigma_inv: linalg::symmetrize(&chol.inverse()),
            mu,
            sigma,
            c,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinRegFit {
    pub m_beta: DVector<f64>,
    pub s_beta: DMatrix<f64>,
    /// Inverse-gamma shape of `q(τ²)`.
    pub a_post: f64,
    /// Inverse-gamma scale of `q(τ²)`.
    pub b_post: f64,
    pub elbo_trace: ElboTrace,
}

impl LinRegFit {
    pub fn sd(&self, j: usize) -> f64 {
        self.s_beta[(j, j)].sqrt()
    }

    /// `E[1/τ²]`.
    pub fn expected_noise_precision(&self) -> f64 {
        self.a_post / self.b_post
    }
}

struct Sufficient {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl Sufficient {
    fn new(x: &DMatrix<f64>, y: &[f64]) -> Self {
        let p = x.ncols();
        let mut xtx = DMatrix::zeros(p, p);
        let mut xty = DVector::zeros(p);
        let mut yty = 0.0;
        for i in 0..x.nrows() {
            let row = x.row(i).transpose();
            xtx.ger(1.0, &row, &row, 1.0);
            xty.axpy(y[i], &row, 1.0);
            yty += y[i] * y[i];
        }
        Self {
            xtx,
            xty,
            yty,
            n: x.nrows(),
        }
    }

    /// `E_q‖y − Xβ‖² = ‖y − Xm‖² + tr(XᵀX S)`.
    fn expected_sq_resid(&self, m: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
        let fit = self.yty - 2.0 * m.dot(&self.xty) + linalg::quad_form(&self.xtx, m);
        fit.max(0.0) + (&self.xtx * s).trace()
    }
}

fn inv_gamma_kl(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (a - c) * digamma(a) - ln_gamma(a) + ln_gamma(c) + c * (b.ln() - d.ln()) + a * (d - b) / b
}

fn elbo_from(stats: &Sufficient, fit: &LinRegFit, prior: &LinRegPrior) -> f64 {
    let n = stats.n as f64;
    let (a, b) = (fit.a_post, fit.b_post);
    let resid = stats.expected_sq_resid(&fit.m_beta, &fit.s_beta);
    let e_log_tau2 = b.ln() - digamma(a);
    let loglik = -0.5 * n * (2.0 * PI).ln() - 0.5 * n * e_log_tau2 - 0.5 * (a / b) * resid;
    let log_det_s = linalg::log_det_spd(&fit.s_beta, "regression posterior covariance").unwrap_or(f64::NAN);
    loglik
        - gaussian_kl(&fit.m_beta, &fit.s_beta, log_det_s, &prior.mu, &prior.sigma_inv, prior.log_det_sigma)
        - inv_gamma_kl(a, b, prior.c, prior.d)
}

pub fn linreg_elbo(fit: &LinRegFit, x: &DMatrix<f64>, y: &[f64], prior: &LinRegPrior) -> f64 {
    elbo_from(&Sufficient::new(x, y), fit, prior)
}

/// Coordinate ascent over `q(β) = N(m, S)` and `q(τ²) = InvGamma(a, b)`:
///
/// ```text
/// S = (Σ⁻¹ + E[1/τ²] XᵀX)⁻¹,   m = S (Σ⁻¹μ + E[1/τ²] Xᵀy)
/// a = c + N/2,   b = d + ½ E_q‖y − Xβ‖²,   E[1/τ²] = a / b
/// ```
///
/// Starts from `E[1/τ²] = c/d`. With no rows the prior is returned.
pub fn fit_linreg_vb(
    x: &DMatrix<f64>,
    y: &[f64],
    prior: &LinRegPrior,
    opts: &RegressionOptions,
) -> Result<LinRegFit> {
    check_design(x, y, prior.dim())?;
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be positive".into()));
    }
    let mut fit = LinRegFit {
        m_beta: prior.mu.clone(),
        s_beta: prior.sigma.clone(),
        a_post: prior.c,
        b_post: prior.d,
        elbo_trace: ElboTrace::new(),
    };
    if x.nrows() == 0 {
        fit.elbo_trace.push(0.0);
        fit.elbo_trace.stopped_because = StopReason::DeltaThreshold;
        return Ok(fit);
    }

    let stats = Sufficient::new(x, y);
    let prior_pull = &prior.sigma_inv * &prior.mu;
    let mut noise_precision = prior.c / prior.d;
    for iter in 1..=opts.max_iters {
        let precision = &prior.sigma_inv + &stats.xtx * noise_precision;
        let chol = linalg::cholesky(&precision, "regression posterior precision")?;
        fit.s_beta = linalg::symmetrize(&chol.inverse());
        fit.m_beta = chol.solve(&(&prior_pull + &stats.xty * noise_precision));

        fit.a_post = prior.c + 0.5 * stats.n as f64;
        fit.b_post = prior.d + 0.5 * stats.expected_sq_resid(&fit.m_beta, &fit.s_beta);
        noise_precision = fit.a_post / fit.b_post;

        let elbo = elbo_from(&stats, &fit, prior);
        if !elbo.is_finite() {
            return Err(Error::NonFinite("regression ELBO"));
        }
        let delta = fit.elbo_trace.push(elbo);
        if delta.is_some_and(|d| d.abs() < opts.delta) {
            fit.elbo_trace.stopped_because = StopReason::DeltaThreshold;
            return Ok(fit);
        }
        if iter == opts.max_iters {
            fit.elbo_trace.stopped_because = StopReason::MaxIters;
        }
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_data_returns_prior() {
        let prior = LinRegPrior::new(DVector::from_column_slice(&[1.0, 2.0]), DMatrix::identity(2, 2), 2.0, 3.0)
            .unwrap();
        let fit = fit_linreg_vb(&DMatrix::zeros(0, 2), &[], &prior, &Default::default()).unwrap();
        assert_eq!(&fit.m_beta, prior.mu());
        assert_eq!(&fit.s_beta, prior.sigma());
        assert_eq!((fit.a_post, fit.b_post), (2.0, 3.0));
    }

    #[test]
    fn intercept_only_recovers_mean() {
        let y: Vec<f64> = (0..200).map(|i| 5.0 + ((i * 37 % 17) as f64 - 8.0) / 4.0).collect();
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        let x = DMatrix::from_element(200, 1, 1.0);
        // c, d chosen so the prior noise variance d/(c-1) matches the sample variance
        let prior = LinRegPrior::new(DVector::zeros(1), DMatrix::from_element(1, 1, 1e6), 50.0, 49.0 * var).unwrap();
        let fit = fit_linreg_vb(&x, &y, &prior, &Default::default()).unwrap();
        assert!((fit.m_beta[0] - ybar).abs() < 1e-3);
    }

    #[test]
    fn inv_gamma_kl_zero_at_self() {
        assert_relative_eq!(inv_gamma_kl(3.0, 2.0, 3.0, 2.0), 0.0, epsilon = 1e-14);
        assert!(inv_gamma_kl(4.0, 2.0, 3.0, 2.0) > 0.0);
    }

    #[test]
    fn rejects_bad_prior() {
        assert!(LinRegPrior::new(DVector::zeros(1), DMatrix::identity(1, 1), 0.0, 1.0).is_err());
        assert!(LinRegPrior::new(DVector::zeros(2), DMatrix::zeros(2, 2), 1.0, 1.0).is_err());
    }

    fn small_problem(seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::testutil::rng(seed);
        let n = 15;
        let mut x = DMatrix::from_element(n, 2, 1.0);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let d = if i % 3 == 0 { 1.0 } else { 0.0 };
            x[(i, 1)] = d;
            let e: f64 = rng.sample(StandardNormal);
            y.push(2.0 - 1.5 * d + 0.7 * e);
        }
        (x, y)
    }

    fn vague(p: usize) -> LinRegPrior {
        LinRegPrior::new(DVector::zeros(p), DMatrix::identity(p, p) * 1e6, 1.0, 1.0).unwrap()
    }

    /// Normal–inverse-gamma posterior mean with `β | τ² ~ N(0, τ² V0)`:
    /// `(V0⁻¹ + XᵀX)⁻¹ Xᵀy`, solved by explicit 2×2 inversion.
    fn nig_mean(x: &DMatrix<f64>, y: &[f64], v0: f64) -> [f64; 2] {
        let (mut a, mut b, mut c, mut u, mut w) = (1.0 / v0, 0.0, 1.0 / v0, 0.0, 0.0);
        for i in 0..x.nrows() {
            let (x0, x1) = (x[(i, 0)], x[(i, 1)]);
            a += x0 * x0;
            b += x0 * x1;
            c += x1 * x1;
            u += x0 * y[i];
            w += x1 * y[i];
        }
        let det = a * c - b * b;
        [(c * u - b * w) / det, (a * w - b * u) / det]
    }

    #[test]
    fn matches_conjugate_posterior_mean() {
        for seed in 0..10 {
            let (x, y) = small_problem(seed);
            let fit = fit_linreg_vb(&x, &y, &vague(2), &Default::default()).unwrap();
            let exact = nig_mean(&x, &y, 1e6);
            for j in 0..2 {
                assert!((fit.m_beta[j] - exact[j]).abs() < 0.05, "seed {seed} coef {j}");
            }
        }
    }

    #[test]
    fn shift_coefficient_ignores_response_offset() {
        let (x, y) = small_problem(3);
        let prior = LinRegPrior::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1e8, 100.0])),
            1.0,
            1.0,
        )
        .unwrap();
        let opts = RegressionOptions { delta: 1e-12, max_iters: 10_000 };
        let base = fit_linreg_vb(&x, &y, &prior, &opts).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| v + 25.0).collect();
        let shifted = fit_linreg_vb(&x, &moved, &prior, &opts).unwrap();
        assert!((base.m_beta[1] - shifted.m_beta[1]).abs() < 1e-6);
        assert!((shifted.m_beta[0] - base.m_beta[0] - 25.0).abs() < 1e-4);
    }

    #[test]
    fn elbo_trace_is_monotone() {
        for seed in 0..20 {
            let (x, y) = small_problem(seed);
            let prior = LinRegPrior::new(DVector::zeros(2), DMatrix::identity(2, 2) * 4.0, 2.0, 0.5).unwrap();
            let fit = fit_linreg_vb(&x, &y, &prior, &RegressionOptions { delta: 1e-12, max_iters: 500 }).unwrap();
            assert!(fit.elbo_trace.min_delta().unwrap_or(0.0) >= -1e-8, "seed {seed}");
            let last = *fit.elbo_trace.values.last().unwrap();
            assert!((linreg_elbo(&fit, &x, &y, &prior) - last).abs() < 1e-9);
        }
    }
}
