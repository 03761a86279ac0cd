use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{argmax_row, column_sums, GmmState, Responsibilities};
use crate::par;
use crate::special::{digamma, log_sum_exp, wishart_expected_log_det};

/// Per-component terms of `ln ρ_nk` that do not depend on `x_n`.
pub(crate) fn log_rho_offsets(state: &GmmState) -> Vec<f64> {
    let d = state.dim();
    let k = state.k();
    let alpha_sum: f64 = state.alpha.iter().sum();
    let psi_sum = digamma(alpha_sum);
    (0..k)
        .map(|j| {
            let e_log_pi = digamma(state.alpha[j]) - psi_sum;
            let e_log_det = wishart_expected_log_det(state.log_det_w[j], state.nu[j], d);
            e_log_pi + 0.5 * e_log_det
                - 0.5 * d as f64 / state.lambda[j]
                - 0.5 * d as f64 * (2.0 * PI).ln()
        })
        .collect()
}

/// Update `q(z)` given the current `q(π, μ, Λ)`.
///
/// `r_nk ∝ exp(E[ln π_k] + ½E[ln|Λ_k|] − D/(2λ_k) − (ν_k/2)(x_n − m_k)ᵀW_k(x_n − m_k) − (D/2)ln 2π)`,
/// normalised per row with log-sum-exp.
pub fn e_step(state: &GmmState, data: &DMatrix<f64>) -> Responsibilities {
    let n = data.nrows();
    let d = data.ncols();
    let k = state.k();
    debug_assert_eq!(d, state.dim());
    let offsets = log_rho_offsets(state);

    let rows: Vec<Vec<f64>> = par::map_indexed(n, |i| {
        let mut log_rho = vec![0.0; k];
        let mut diff = vec![0.0; d];
        for j in 0..k {
            for (t, slot) in diff.iter_mut().enumerate() {
                *slot = data[(i, t)] - state.m[(t, j)];
            }
            let q = crate::linalg::quad_form_slice(&state.w[j], &diff);
            log_rho[j] = offsets[j] - 0.5 * state.nu[j] * q;
        }
        let lse = log_sum_exp(&log_rho);
        let mut row: Vec<f64> = log_rho.iter().map(|v| (v - lse).exp()).collect();
        let s: f64 = row.iter().sum();
        for v in &mut row {
            *v /= s;
        }
        row
    });

    let mut r = DMatrix::zeros(n, k);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            r[(i, j)] = *v;
        }
    }
    let hard_labels = (0..n).map(|i| argmax_row(&r, i)).collect();
    let nk = column_sums(&r);
    Responsibilities { r, hard_labels, nk }
}
