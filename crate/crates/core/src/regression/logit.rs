//! Bayesian logistic regression with a Gaussian prior, fitted by coordinate
//! ascent on the quadratic (tanh) lower bound of the logistic likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_design, gaussian_kl, RegressionOptions};
use crate::gmm::{ElboTrace, StopReason};
use crate::linalg;
use crate::special::{expit, ln_expit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogitPrior {
    m0: DVector<f64>,
    s0: DMatrix<f64>,
    s0_inv: DMatrix<f64>,
    log_det_s0: f64,
}

impl LogitPrior {
    pub fn new(m0: DVector<f64>, s0: DMatrix<f64>) -> Result<Self> {
        if s0.nrows() != m0.len() || s0.ncols() != m0.len() {
            return Err(Error::DimensionMismatch {
                context: "logit prior covariance",
                expected: m0.len(),
                found: s0.nrows(),
            });
        }
        if m0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logit prior mean"));
        }
        let chol = linalg::cholesky(&s0, "logit prior covariance")?;
        Ok(Self {
            log_det_s0: linalg::log_det_chol(&chol),
            s0_inv: linalg::symmetrize(&chol.inverse()),
            m0,
            s0,
        })
    }

    /// Zero mean, `variance · I` covariance.
    pub fn isotropic(p: usize, variance: f64) -> Result<Self> {
        Self::new(DVector::zeros(p), DMatrix::identity(p, p) * variance)
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn s0(&self) -> &DMatrix<f64> {
        &self.s0
    }
}

/// Gaussian variational posterior `N(m, S)` with local bound parameters `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub m: DVector<f64>,
    pub s: DMatrix<f64>,
    pub xi: DVector<f64>,
    pub elbo_trace: ElboTrace,
}

impl LogitFit {
    pub fn sd(&self, j: usize) -> f64 {
        self.s[(j, j)].sqrt()
    }
}

/// `g(ξ) = tanh(ξ/2) / (2ξ)`, with the limit `1/4` at zero.
pub fn bound_weight(xi: f64) -> f64 {
    let a = xi.abs();
    if a < 1e-6 {
        0.25 - a * a / 48.0
    } else {
        (0.5 * a).tanh() / (2.0 * a)
    }
}

fn optimal_xi(x: &DMatrix<f64>, m: &DVector<f64>, s: &DMatrix<f64>) -> DVector<f64> {
    let second_moment = s + m * m.transpose();
    DVector::from_iterator(
        x.nrows(),
        (0..x.nrows()).map(|i| {
            let row = x.row(i).transpose();
            linalg::quad_form(&second_moment, &row).max(0.0).sqrt()
        }),
    )
}

/// Quadratic-bound ELBO: `E_q[ln h(β, ξ)] − KL(q(β) || p(β))`, where
/// `ln h = Σ_i ln σ(ξ_i) + (y_i − ½) x_iᵀβ − ξ_i/2 − ½g(ξ_i)((x_iᵀβ)² − ξ_i²)`.
pub fn logit_elbo(fit: &LogitFit, x: &DMatrix<f64>, y: &[f64], prior: &LogitPrior) -> f64 {
    let second_moment = &fit.s + &fit.m * fit.m.transpose();
    let mut bound = 0.0;
    for i in 0..x.nrows() {
        let row = x.row(i).transpose();
        let xi = fit.xi[i];
        let lin = row.dot(&fit.m);
        let sq = linalg::quad_form(&second_moment, &row);
        bound += ln_expit(xi) + (y[i] - 0.5) * lin - 0.5 * xi - 0.5 * bound_weight(xi) * (sq - xi * xi);
    }
    let log_det_s = linalg::log_det_spd(&fit.s, "logit posterior covariance").unwrap_or(f64::NAN);
    bound - gaussian_kl(&fit.m, &fit.s, log_det_s, &prior.m0, &prior.s0_inv, prior.log_det_s0)
}

/// Fit `q(β) = N(m, S)` by alternating
///
/// ```text
/// S = (S0⁻¹ + Xᵀ diag(g(ξ)) X)⁻¹,   m = S (S0⁻¹ m0 + Xᵀ (y − ½))
/// ξ_i = sqrt(x_iᵀ (S + m mᵀ) x_i)
/// ```
///
/// `y` may hold soft labels in `[0, 1]`. With no rows the prior is returned.
pub fn fit_logit_cavi(
    x: &DMatrix<f64>,
    y: &[f64],
    prior: &LogitPrior,
    opts: &RegressionOptions,
) -> Result<LogitFit> {
    let p = prior.dim();
    check_design(x, y, p)?;
    if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("logit response {bad} outside [0, 1]")));
    }
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be positive".into()));
    }
    let n = x.nrows();
    let mut fit = LogitFit {
        m: prior.m0.clone(),
        s: prior.s0.clone(),
        xi: optimal_xi(x, &prior.m0, &prior.s0),
        elbo_trace: ElboTrace::new(),
    };
    if n == 0 {
        fit.elbo_trace.push(0.0);
        fit.elbo_trace.stopped_because = StopReason::DeltaThreshold;
        return Ok(fit);
    }

    let mut pseudo = &prior.s0_inv * &prior.m0;
    for i in 0..n {
        let w = y[i] - 0.5;
        for j in 0..p {
            pseudo[j] += x[(i, j)] * w;
        }
    }

    for iter in 1..=opts.max_iters {
        let mut precision = prior.s0_inv.clone();
        for i in 0..n {
            let g = bound_weight(fit.xi[i]);
            let row = x.row(i).transpose();
            precision.ger(g, &row, &row, 1.0);
        }
        let chol = linalg::cholesky(&precision, "logit posterior precision")?;
        fit.s = linalg::symmetrize(&chol.inverse());
        fit.m = chol.solve(&pseudo);
        fit.xi = optimal_xi(x, &fit.m, &fit.s);

        let elbo = logit_elbo(&fit, x, y, prior);
        if !elbo.is_finite() {
            return Err(Error::NonFinite("logit ELBO"));
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

/// Plug-in predictive `expit(x_iᵀ m)`.
pub fn predict_prob(fit: &LogitFit, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != fit.m.len() {
        return Err(Error::DimensionMismatch {
            context: "prediction design",
            expected: fit.m.len(),
            found: x.ncols(),
        });
    }
    Ok((0..x.nrows()).map(|i| expit(x.row(i).transpose().dot(&fit.m))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensSpec {
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Sensitivity and specificity of an indicator from a covariate-free
/// `[intercept, D]` logit fit: `expit(β0 + β1)` and `1 − expit(β0)`.
pub fn sens_spec(fit: &LogitFit) -> Result<SensSpec> {
    if fit.m.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "sensitivity/specificity need an [intercept, class] design, got {} coefficients",
            fit.m.len()
        )));
    }
    Ok(SensSpec {
        sensitivity: expit(fit.m[0] + fit.m[1]),
        specificity: 1.0 - expit(fit.m[0]),
    })
}
