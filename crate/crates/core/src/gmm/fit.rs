use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{compute_elbo, e_step, m_step, ElboTrace, GmmPrior, GmmState, Responsibilities, StopReason};
use crate::par;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmOptions {
    /// Stop once `|ΔELBO| < delta`.
    pub delta: f64,
    pub max_iters: usize,
    /// Stop at the first decrease of the ELBO and return the state before it.
    pub stop_if_elbo_reverse: bool,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            max_iters: 1000,
            stop_if_elbo_reverse: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub state: GmmState,
    pub resp: Responsibilities,
    pub trace: ElboTrace,
}

impl GmmFit {
    /// ELBO of the returned state (not necessarily the last trace entry).
    pub fn elbo(&self) -> f64 {
        match self.trace.stopped_because {
            StopReason::ElboReversed => self.trace.values[self.trace.values.len() - 2],
            _ => *self.trace.values.last().expect("trace is never empty"),
        }
    }
}

/// Fit the mixture by coordinate ascent, starting from hard labels.
///
/// Each iteration runs an M-step on the current responsibilities, an E-step
/// on the resulting state, and records the ELBO of the pair.
pub fn fit_gmm(
    data: &DMatrix<f64>,
    k: usize,
    prior: &GmmPrior,
    init_labels: &[usize],
    opts: &GmmOptions,
) -> Result<GmmFit> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::TooFewObservations { n, k });
    }
    if prior.k() != k {
        return Err(Error::DimensionMismatch {
            context: "prior components",
            expected: k,
            found: prior.k(),
        });
    }
    if prior.dim() != data.ncols() {
        return Err(Error::DimensionMismatch {
            context: "prior dimension",
            expected: data.ncols(),
            found: prior.dim(),
        });
    }
    if init_labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial labels",
            expected: n,
            found: init_labels.len(),
        });
    }
    if let Some(&bad) = init_labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidParameter(format!(
            "initial label {bad} outside 0..{k}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mixture data"));
    }
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be positive".into()));
    }

    let mut resp = Responsibilities::from_labels(init_labels, k);
    let mut trace = ElboTrace::new();
    let mut previous: Option<(GmmState, Responsibilities)> = None;

    for iter in 1..=opts.max_iters {
        let state = m_step(&resp, data, prior)?;
        resp = e_step(&state, data);
        let elbo = compute_elbo(&state, &resp, data, prior);
        if !elbo.is_finite() {
            return Err(Error::NonFinite("mixture ELBO"));
        }
        let delta = trace.push(elbo);
        log::trace!("gmm iter {iter}: elbo {elbo:.10e}");

        if let Some(delta) = delta {
            if opts.stop_if_elbo_reverse && delta < 0.0 {
                let (state, resp) = previous.expect("a delta implies a previous iterate");
                trace.stopped_because = StopReason::ElboReversed;
                return Ok(GmmFit { state, resp, trace });
            }
            if delta.abs() < opts.delta {
                trace.stopped_because = StopReason::DeltaThreshold;
                return Ok(GmmFit { state, resp, trace });
            }
        }
        if iter == opts.max_iters {
            trace.stopped_because = StopReason::MaxIters;
            return Ok(GmmFit { state, resp, trace });
        }
        previous = Some((state, resp.clone()));
    }
    unreachable!("loop returns on its last iteration")
}

/// One independent fit in a batch.
#[derive(Debug, Clone)]
pub struct FitJob<'a> {
    pub data: &'a DMatrix<f64>,
    pub k: usize,
    pub prior: GmmPrior,
    pub init_labels: Vec<usize>,
    pub opts: GmmOptions,
}

/// Run independent fits (prior sweeps, restarts) concurrently. Results are
/// returned in job order.
pub fn fit_many(jobs: &[FitJob<'_>]) -> Vec<Result<GmmFit>> {
    par::map_slice(jobs, |job| {
        fit_gmm(job.data, job.k, &job.prior, &job.init_labels, &job.opts)
    })
}
