//! Variational regressions used by the second and third pipeline stages.

pub mod linreg;
pub mod logit;

pub use linreg::{fit_linreg_vb, linreg_elbo, LinRegFit, LinRegPrior};
pub use logit::{
    bound_weight, fit_logit_cavi, logit_elbo, predict_prob, sens_spec, LogitFit, LogitPrior,
    SensSpec,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionOptions {
    pub delta: f64,
    pub max_iters: usize,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            max_iters: 1000,
        }
    }
}

use nalgebra::{DMatrix, DVector};

/// `KL(N(m, S) || N(m0, S0))` given `S0⁻¹` and `ln|S0|`.
pub(crate) fn gaussian_kl(
    m: &DVector<f64>,
    s: &DMatrix<f64>,
    log_det_s: f64,
    m0: &DVector<f64>,
    s0_inv: &DMatrix<f64>,
    log_det_s0: f64,
) -> f64 {
    let p = m.len() as f64;
    let dm = m0 - m;
    0.5 * ((s0_inv * s).trace() + crate::linalg::quad_form(s0_inv, &dm) - p + log_det_s0 - log_det_s)
}

pub(crate) fn check_design(x: &DMatrix<f64>, y: &[f64], p: usize) -> crate::Result<()> {
    use crate::Error;
    if x.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "design columns",
            expected: p,
            found: x.ncols(),
        });
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            context: "response length",
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    Ok(())
}
