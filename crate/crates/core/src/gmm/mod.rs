//! CAVI Gaussian mixture with a Dirichlet prior on the mixing weights and
//! independent Normal–Wishart priors on the component means and precisions.
//!
//! Data matrices are `N × D` with one observation per row. Component means
//! are stored column-wise in a `D × K` matrix. Component indices are
//! zero-based throughout the crate.

mod elbo;
mod estep;
mod fit;
mod mstep;
mod prior;

pub use elbo::{compute_elbo, elbo_terms, ElboTerms};
pub use estep::e_step;
pub use fit::{fit_gmm, fit_many, FitJob, GmmFit, GmmOptions};
pub use mstep::{m_step, DEGENERATE_COUNT};
pub use prior::{GmmPrior, GmmPriorSpec, MatrixSpec, MeanSpec, ScalarOrVec};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Posterior hyperparameters of the variational factors `q(π)` and `q(μ, Λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmState {
    pub alpha: DVector<f64>,
    pub lambda: DVector<f64>,
    /// `D × K`, column `k` is the mean of component `k`.
    pub m: DMatrix<f64>,
    pub w: Vec<DMatrix<f64>>,
    pub log_det_w: Vec<f64>,
    pub nu: DVector<f64>,
    /// `E[π_k] = α_k / Σ α`.
    pub mixing_weights: DVector<f64>,
    /// Components whose effective count fell below [`DEGENERATE_COUNT`] in
    /// the update that produced this state.
    pub degenerate_components: Vec<usize>,
}

impl GmmState {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Expected covariance `(ν_k W_k)⁻¹` of component `k`.
    pub fn expected_covariance(&self, k: usize) -> DMatrix<f64> {
        crate::linalg::spd_inverse(&(&self.w[k] * self.nu[k]), "expected precision")
            .unwrap_or_else(|_| DMatrix::from_element(self.dim(), self.dim(), f64::NAN))
    }

    /// Number of components whose expected mixing weight exceeds `threshold`.
    pub fn effective_components(&self, threshold: f64) -> usize {
        self.mixing_weights.iter().filter(|&&w| w > threshold).count()
    }

    pub fn mean(&self, k: usize) -> DVector<f64> {
        self.m.column(k).into_owned()
    }
}

/// Soft assignments `r[n, k] = q(z_n = k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub r: DMatrix<f64>,
    pub hard_labels: Vec<usize>,
    pub nk: DVector<f64>,
}

impl Responsibilities {
    /// One-hot responsibilities from hard labels.
    pub fn from_labels(labels: &[usize], k: usize) -> Self {
        let mut r = DMatrix::zeros(labels.len(), k);
        for (n, &l) in labels.iter().enumerate() {
            r[(n, l)] = 1.0;
        }
        Self::from_matrix(r)
    }

    /// Wrap a row-stochastic matrix, deriving hard labels and counts.
    pub fn from_matrix(r: DMatrix<f64>) -> Self {
        let hard_labels = (0..r.nrows()).map(|n| argmax_row(&r, n)).collect();
        let nk = column_sums(&r);
        Self { r, hard_labels, nk }
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn k(&self) -> usize {
        self.r.ncols()
    }
}

/// Column sums accumulated in row order.
pub(crate) fn column_sums(r: &DMatrix<f64>) -> DVector<f64> {
    let mut nk = DVector::zeros(r.ncols());
    for k in 0..r.ncols() {
        let mut s = 0.0;
        for n in 0..r.nrows() {
            s += r[(n, k)];
        }
        nk[k] = s;
    }
    nk
}

/// First index of the row maximum.
pub(crate) fn argmax_row(r: &DMatrix<f64>, n: usize) -> usize {
    let mut best = 0;
    for k in 1..r.ncols() {
        if r[(n, k)] > r[(n, best)] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    DeltaThreshold,
    MaxIters,
    ElboReversed,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::DeltaThreshold => "DeltaThreshold",
            StopReason::MaxIters => "MaxIters",
            StopReason::ElboReversed => "ElboReversed",
        }
    }
}

impl std::str::FromStr for StopReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DeltaThreshold" => Ok(StopReason::DeltaThreshold),
            "MaxIters" => Ok(StopReason::MaxIters),
            "ElboReversed" => Ok(StopReason::ElboReversed),
            other => Err(format!("unknown stop reason `{other}`")),
        }
    }
}

/// Per-iteration objective values of a CAVI run.
///
/// `deltas[t - 1] = values[t] - values[t - 1]`, so `deltas` is one shorter
/// than `values`. When a run stops on a reversal the reversed value is kept
/// as the last entry even though the returned state is the one before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElboTrace {
    pub values: Vec<f64>,
    pub deltas: Vec<f64>,
    pub stopped_because: StopReason,
}

impl Default for ElboTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl ElboTrace {
    pub(crate) fn new() -> Self {
        Self {
            values: Vec::new(),
            deltas: Vec::new(),
            stopped_because: StopReason::MaxIters,
        }
    }

    /// Append a value and return its delta to the previous one, if any.
    pub(crate) fn push(&mut self, value: f64) -> Option<f64> {
        let delta = self.values.last().map(|prev| value - prev);
        if let Some(d) = delta {
            self.deltas.push(d);
        }
        self.values.push(value);
        delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks `deltas` against successive differences of `values`.
    pub fn is_consistent(&self) -> bool {
        if self.values.is_empty() {
            return self.deltas.is_empty();
        }
        self.deltas.len() + 1 == self.values.len()
            && self
                .deltas
                .iter()
                .zip(self.values.windows(2))
                .all(|(d, w)| (d - (w[1] - w[0])).abs() <= 1e-9 * (1.0 + w[1].abs()))
    }

    /// Smallest delta (most negative step), if there is one.
    pub fn min_delta(&self) -> Option<f64> {
        self.deltas.iter().copied().reduce(f64::min)
    }
}
