use nalgebra::{DMatrix, DVector};

use super::{GmmPrior, GmmState, Responsibilities};
use crate::linalg;
use crate::{Error, Result};

/// Effective counts below this are treated as empty components.
pub const DEGENERATE_COUNT: f64 = 1e-10;

/// Conjugate update of `q(π)` and `q(μ_k, Λ_k)` from the responsibilities.
///
/// ```text
/// α_k = α0_k + N_k      λ_k = λ0_k + N_k      ν_k = ν0 + N_k
/// m_k = (λ0_k m0_k + N_k x̄_k) / λ_k
/// W_k⁻¹ = W0⁻¹ + N_k S_k + λ0_k N_k / (λ0_k + N_k) (x̄_k − m0_k)(x̄_k − m0_k)ᵀ
/// ```
///
/// Components with `N_k < DEGENERATE_COUNT` keep their prior mean and scale.
/// When `W_k⁻¹` cannot be factorized even after one jittered retry the
/// component is reported as degenerate.
pub fn m_step(resp: &Responsibilities, data: &DMatrix<f64>, prior: &GmmPrior) -> Result<GmmState> {
    let n = data.nrows();
    let d = data.ncols();
    let k = prior.k();
    if resp.n() != n {
        return Err(Error::DimensionMismatch {
            context: "responsibility rows",
            expected: n,
            found: resp.n(),
        });
    }
    if resp.k() != k {
        return Err(Error::DimensionMismatch {
            context: "responsibility columns",
            expected: k,
            found: resp.k(),
        });
    }
    if prior.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "prior dimension",
            expected: d,
            found: prior.dim(),
        });
    }

    let mut alpha = DVector::zeros(k);
    let mut lambda = DVector::zeros(k);
    let mut nu = DVector::zeros(k);
    let mut m = DMatrix::zeros(d, k);
    let mut w = Vec::with_capacity(k);
    let mut log_det_w = Vec::with_capacity(k);
    let mut degenerate = Vec::new();

    for j in 0..k {
        let nk = resp.nk[j];
        let a0 = prior.alpha0()[j];
        let l0 = prior.lambda0()[j];
        let m0 = prior.m0().column(j).into_owned();
        alpha[j] = a0 + nk;
        lambda[j] = l0 + nk;
        nu[j] = prior.nu0() + nk;

        if nk < DEGENERATE_COUNT {
            log::debug!("component {j} is empty (N_k = {nk:e}); keeping its prior");
            degenerate.push(j);
            m.set_column(j, &m0);
            w.push(prior.w0().clone());
            log_det_w.push(prior.log_det_w0());
            continue;
        }

        let mut xbar = DVector::zeros(d);
        for i in 0..n {
            let r = resp.r[(i, j)];
            for t in 0..d {
                xbar[t] += r * data[(i, t)];
            }
        }
        xbar /= nk;

        // N_k S_k accumulated directly as the weighted scatter.
        let mut scatter = DMatrix::zeros(d, d);
        let mut diff = DVector::zeros(d);
        for i in 0..n {
            let r = resp.r[(i, j)];
            if r == 0.0 {
                continue;
            }
            for t in 0..d {
                diff[t] = data[(i, t)] - xbar[t];
            }
            scatter.ger(r, &diff, &diff, 1.0);
        }

        let dm = &xbar - &m0;
        let mut w_inv = prior.w0_inv() + scatter;
        w_inv.ger(l0 * nk / (l0 + nk), &dm, &dm, 1.0);

        let wk = linalg::spd_inverse_jittered(&w_inv).ok_or(Error::DegenerateComponent { component: j })?;
        let ld = linalg::log_det_spd(&wk, "component scale")
            .map_err(|_| Error::DegenerateComponent { component: j })?;

        m.set_column(j, &((m0 * l0 + xbar * nk) / lambda[j]));
        w.push(wk);
        log_det_w.push(ld);
    }

    let total: f64 = alpha.iter().sum();
    let mixing_weights = &alpha / total;
    Ok(GmmState {
        alpha,
        lambda,
        m,
        w,
        log_det_w,
        nu,
        mixing_weights,
        degenerate_components: degenerate,
    })
}
