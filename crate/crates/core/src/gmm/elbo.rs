use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{GmmPrior, GmmState, Responsibilities};
use crate::linalg::quad_form;
use crate::par;
use crate::special::{digamma, ln_dirichlet_norm, ln_wishart_norm, wishart_expected_log_det};

/// The seven expectations making up the mixture ELBO, constants included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    /// `E[ln p(X | Z, μ, Λ)]`
    pub expected_log_lik: f64,
    /// `E[ln p(Z | π)]`
    pub log_p_z: f64,
    /// `E[ln p(π)]`
    pub log_p_pi: f64,
    /// `E[ln p(μ, Λ)]`
    pub log_p_mu_lambda: f64,
    /// `E[ln q(Z)]`
    pub log_q_z: f64,
    /// `E[ln q(π)]`
    pub log_q_pi: f64,
    /// `E[ln q(μ, Λ)]`
    pub log_q_mu_lambda: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.expected_log_lik + self.log_p_z + self.log_p_pi + self.log_p_mu_lambda
            - self.log_q_z
            - self.log_q_pi
            - self.log_q_mu_lambda
    }
}

pub fn compute_elbo(
    state: &GmmState,
    resp: &Responsibilities,
    data: &DMatrix<f64>,
    prior: &GmmPrior,
) -> f64 {
    elbo_terms(state, resp, data, prior).total()
}

pub fn elbo_terms(
    state: &GmmState,
    resp: &Responsibilities,
    data: &DMatrix<f64>,
    prior: &GmmPrior,
) -> ElboTerms {
    let n = data.nrows();
    let d = data.ncols();
    let df = d as f64;
    let k = state.k();
    let ln2pi = (2.0 * PI).ln();

    let alpha_sum: f64 = state.alpha.iter().sum();
    let psi_sum = digamma(alpha_sum);
    let e_log_pi: Vec<f64> = (0..k).map(|j| digamma(state.alpha[j]) - psi_sum).collect();
    let e_log_det: Vec<f64> = (0..k)
        .map(|j| wishart_expected_log_det(state.log_det_w[j], state.nu[j], d))
        .collect();

    // Σ_n r_nk (x_n − m_k)ᵀ W_k (x_n − m_k), per-row values reduced in order.
    let row_quads: Vec<Vec<f64>> = par::map_indexed(n, |i| {
        let mut diff = vec![0.0; d];
        (0..k)
            .map(|j| {
                let r = resp.r[(i, j)];
                if r == 0.0 {
                    return 0.0;
                }
                for (t, slot) in diff.iter_mut().enumerate() {
                    *slot = data[(i, t)] - state.m[(t, j)];
                }
                r * crate::linalg::quad_form_slice(&state.w[j], &diff)
            })
            .collect()
    });
    let mut weighted_quad = vec![0.0; k];
    for row in &row_quads {
        for (j, v) in row.iter().enumerate() {
            weighted_quad[j] += v;
        }
    }

    let mut expected_log_lik = 0.0;
    let mut log_p_z = 0.0;
    let mut log_p_mu_lambda = 0.0;
    let mut log_q_mu_lambda = 0.0;
    let ln_b0 = ln_wishart_norm(prior.log_det_w0(), prior.nu0(), d);
    let nu0 = prior.nu0();

    for j in 0..k {
        let nk = resp.nk[j];
        let lam = state.lambda[j];
        let nu = state.nu[j];
        let l0 = prior.lambda0()[j];

        expected_log_lik +=
            0.5 * (nk * (e_log_det[j] - df / lam - df * ln2pi) - nu * weighted_quad[j]);

        log_p_z += nk * e_log_pi[j];

        let dm = state.m.column(j) - prior.m0().column(j);
        let trace_w0inv_w = (prior.w0_inv() * &state.w[j]).trace();
        log_p_mu_lambda += 0.5
            * (df * (l0 / (2.0 * PI)).ln() + e_log_det[j]
                - df * l0 / lam
                - l0 * nu * quad_form(&state.w[j], &dm.into_owned()))
            + ln_b0
            + 0.5 * (nu0 - df - 1.0) * e_log_det[j]
            - 0.5 * nu * trace_w0inv_w;

        let entropy_wishart = -ln_wishart_norm(state.log_det_w[j], nu, d)
            - 0.5 * (nu - df - 1.0) * e_log_det[j]
            + 0.5 * nu * df;
        log_q_mu_lambda += 0.5 * e_log_det[j] + 0.5 * df * (lam / (2.0 * PI)).ln()
            - 0.5 * df
            - entropy_wishart;
    }

    let alpha0: Vec<f64> = prior.alpha0().iter().copied().collect();
    let log_p_pi = ln_dirichlet_norm(&alpha0)
        + (0..k).map(|j| (alpha0[j] - 1.0) * e_log_pi[j]).sum::<f64>();
    let alpha: Vec<f64> = state.alpha.iter().copied().collect();
    let log_q_pi = ln_dirichlet_norm(&alpha)
        + (0..k).map(|j| (alpha[j] - 1.0) * e_log_pi[j]).sum::<f64>();

    let mut log_q_z = 0.0;
    for i in 0..n {
        for j in 0..k {
            let r = resp.r[(i, j)];
            if r > 0.0 {
                log_q_z += r * r.ln();
            }
        }
    }

    ElboTerms {
        expected_log_lik,
        log_p_z,
        log_p_pi,
        log_p_mu_lambda,
        log_q_z,
        log_q_pi,
        log_q_mu_lambda,
    }
}
