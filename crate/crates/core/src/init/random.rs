use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Assignment;
use crate::{Error, Result};

pub const MAX_REDRAWS: usize = 100;

/// Uniform random labels, redrawn until every component is non-empty. After
/// [`MAX_REDRAWS`] failed draws, falls back to a shuffled round-robin fill.
pub fn init_random(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Assignment> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::TooFewObservations { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().all(|&s| s) {
            return Ok(Assignment::from_labels(data, labels, k, k));
        }
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(&mut rng);
    Ok(Assignment::from_labels(data, labels, k, k))
}
