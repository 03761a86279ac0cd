//! Small dense SPD helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

pub type Chol = Cholesky<f64, Dyn>;

/// Cholesky factorization, failing with a named error when `m` is not SPD.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Chol> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(what.to_string()));
    }
    Cholesky::new(symmetrize(m)).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// `2 Σ log L_ii` for the lower Cholesky factor `L`.
pub fn log_det_chol(chol: &Chol) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

pub fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    Ok(log_det_chol(&cholesky(m, what)?))
}

pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&cholesky(m, what)?.inverse()))
}

/// Invert an SPD matrix, retrying once with diagonal jitter
/// `1e-8 · trace / dim` when the first factorization fails.
pub fn spd_inverse_jittered(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = symmetrize(m);
    if sym.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if let Some(c) = Cholesky::new(sym.clone()) {
        return Some(symmetrize(&c.inverse()));
    }
    let dim = sym.nrows() as f64;
    let jitter = 1e-8 * sym.trace() / dim;
    if !(jitter > 0.0) {
        return None;
    }
    let mut repaired = sym;
    for i in 0..repaired.nrows() {
        repaired[(i, i)] += jitter;
    }
    Cholesky::new(repaired).map(|c| symmetrize(&c.inverse()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `xᵀ A x`.
pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}

/// `xᵀ A x` for `x` given as a slice-like column view.
pub fn quad_form_slice(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[(i, j)] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}
