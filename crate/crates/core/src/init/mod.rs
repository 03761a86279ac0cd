//! Initial hard assignments for the mixture fit.

mod dbscan;
mod kmeans;
mod merge;
mod random;

pub use dbscan::{init_dbscan, RawClustering, GRID_INDEX_THRESHOLD};
pub use kmeans::{init_kmeans, kmeans_plus_plus, lloyd, KMeansRun, KMEANS_RESTARTS, MAX_LLOYD_ITERS};
pub use merge::merge_to_k;
pub use random::{init_random, MAX_REDRAWS};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitMethod {
    Kmeans,
    Dbscan { eps: f64, min_pts: usize },
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    #[serde(flatten)]
    pub method: InitMethod,
    #[serde(default)]
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            method: InitMethod::Kmeans,
            seed: 0,
        }
    }
}

impl InitConfig {
    pub fn kmeans(seed: u64) -> Self {
        Self {
            method: InitMethod::Kmeans,
            seed,
        }
    }

    pub fn dbscan(eps: f64, min_pts: usize, seed: u64) -> Self {
        Self {
            method: InitMethod::Dbscan { eps, min_pts },
            seed,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self {
            method: InitMethod::Random,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitMethod::Dbscan { eps, min_pts } = self.method {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
            }
            if min_pts == 0 {
                return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Hard labels in `0..k` plus the centroids they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    /// `D × k`; columns of empty components are zero.
    pub centroids: DMatrix<f64>,
    /// Clusters found before any merging or splitting.
    pub source_cluster_count: usize,
    pub empty_components: Vec<usize>,
}

impl Assignment {
    pub(crate) fn from_labels(data: &DMatrix<f64>, labels: Vec<usize>, k: usize, source: usize) -> Self {
        let (centroids, counts) = centroids_of(data, &labels, k);
        let empty_components = (0..k).filter(|&c| counts[c] == 0).collect();
        Self {
            labels,
            centroids,
            source_cluster_count: source,
            empty_components,
        }
    }

    pub fn k(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Dispatch on the configured method.
pub fn initialize(data: &DMatrix<f64>, k: usize, cfg: &InitConfig) -> Result<Assignment> {
    cfg.validate()?;
    match cfg.method {
        InitMethod::Kmeans => init_kmeans(data, k, cfg.seed),
        InitMethod::Random => init_random(data, k, cfg.seed),
        InitMethod::Dbscan { eps, min_pts } => {
            if k == 0 || k > data.nrows() {
                return Err(Error::TooFewObservations { n: data.nrows(), k });
            }
            let raw = init_dbscan(data, eps, min_pts);
            log::debug!(
                "dbscan found {} clusters, {} noise points",
                raw.cluster_count,
                raw.noise_count()
            );
            Ok(merge_to_k(&raw, data, k, cfg.seed))
        }
    }
}

/// Column-wise cluster means (`D × k`) and member counts.
pub(crate) fn centroids_of(data: &DMatrix<f64>, labels: &[usize], k: usize) -> (DMatrix<f64>, Vec<usize>) {
    let d = data.ncols();
    let mut sums = DMatrix::zeros(d, k);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for t in 0..d {
            sums[(t, l)] += data[(i, t)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for t in 0..d {
                sums[(t, c)] /= n;
            }
        }
    }
    (sums, counts)
}

pub(crate) fn sq_dist_to_col(data: &DMatrix<f64>, row: usize, cents: &DMatrix<f64>, col: usize) -> f64 {
    let mut s = 0.0;
    for t in 0..data.ncols() {
        let v = data[(row, t)] - cents[(t, col)];
        s += v * v;
    }
    s
}

pub(crate) fn sq_dist_rows(data: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    for t in 0..data.ncols() {
        let v = data[(a, t)] - data[(b, t)];
        s += v * v;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_serde_shape() {
        let cfg: InitConfig =
            serde_json::from_str(r#"{"method":"dbscan","eps":0.15,"min_pts":5,"seed":3}"#).unwrap();
        assert_eq!(cfg, InitConfig::dbscan(0.15, 5, 3));
        let km: InitConfig = serde_json::from_str(r#"{"method":"kmeans"}"#).unwrap();
        assert_eq!(km, InitConfig::kmeans(0));
    }

    #[test]
    fn validate_dbscan_params() {
        assert!(InitConfig::dbscan(0.0, 5, 0).validate().is_err());
        assert!(InitConfig::dbscan(0.1, 0, 0).validate().is_err());
        assert!(InitConfig::dbscan(0.1, 1, 0).validate().is_ok());
    }
}
