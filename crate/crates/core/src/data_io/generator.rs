//! Synthetic rare-disease cohort with known latent labels.
//!
//! Stand-in for a real EHR extract. The majority class has Normal CBC
//! around a healthy value and RC uniform over the healthy range. The small
//! disease class has tight, reduced CBC and elevated RC. Binary clinical
//! indicators are drawn with the configured sensitivity/specificity.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Cohort, Column};
use crate::regression::SensSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub name: String,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScdGenParams {
    pub n: usize,
    pub prevalence: f64,
    /// g/dL
    pub healthy_cbc_mean: f64,
    pub healthy_cbc_sd: f64,
    /// Healthy RC range in percent; healthy values are uniform over it.
    pub healthy_rc_range: (f64, f64),
    pub scd_cbc_mean: f64,
    pub scd_cbc_sd: f64,
    pub scd_rc_mean: f64,
    pub scd_rc_sd: f64,
    pub max_age: f64,
    pub highrisk_rate_healthy: f64,
    pub highrisk_rate_disease: f64,
    pub indicators: Vec<IndicatorSpec>,
    pub seed: u64,
}

impl Default for ScdGenParams {
    fn default() -> Self {
        Self {
            n: 10_000,
            prevalence: 0.003,
            healthy_cbc_mean: 12.0,
            healthy_cbc_sd: 1.0,
            healthy_rc_range: (0.5, 2.5),
            scd_cbc_mean: 4.1,
            scd_cbc_sd: 0.2,
            scd_rc_mean: 5.2,
            scd_rc_sd: 0.1,
            max_age: 90.0,
            highrisk_rate_healthy: 0.1,
            highrisk_rate_disease: 0.8,
            indicators: vec![
                IndicatorSpec {
                    name: "scd_code".into(),
                    sensitivity: 0.9,
                    specificity: 0.95,
                },
                IndicatorSpec {
                    name: "hydroxyurea".into(),
                    sensitivity: 0.6,
                    specificity: 0.99,
                },
            ],
            seed: 1,
        }
    }
}

impl ScdGenParams {
    pub fn disease_count(&self) -> usize {
        (self.n as f64 * self.prevalence).round() as usize
    }

    pub fn healthy_rc_mean(&self) -> f64 {
        0.5 * (self.healthy_rc_range.0 + self.healthy_rc_range.1)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return bad(format!("prevalence must lie in (0, 1), got {}", self.prevalence));
        }
        if self.disease_count() < 5 {
            return bad(format!(
                "n · prevalence = {} gives fewer than 5 disease rows",
                self.n as f64 * self.prevalence
            ));
        }
        let means = [
            self.healthy_cbc_mean,
            self.scd_cbc_mean,
            self.scd_rc_mean,
            self.healthy_rc_range.0,
        ];
        if means.iter().any(|m| !(*m > 0.0)) || self.healthy_rc_range.1 <= self.healthy_rc_range.0 {
            return bad("biomarker means must be positive and the RC range increasing".into());
        }
        let sds = [self.healthy_cbc_sd, self.scd_cbc_sd, self.scd_rc_sd];
        if sds.iter().any(|s| !(*s > 0.0)) {
            return bad("noise standard deviations must be positive".into());
        }
        if !(self.max_age > 0.0) {
            return bad("max_age must be positive".into());
        }
        let rates = [self.highrisk_rate_healthy, self.highrisk_rate_disease];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("high-risk rates must lie in [0, 1]".into());
        }
        for ind in &self.indicators {
            if !(0.0..=1.0).contains(&ind.sensitivity) || !(0.0..=1.0).contains(&ind.specificity) {
                return bad(format!("indicator `{}` needs sensitivity/specificity in [0, 1]", ind.name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// 1 for disease rows.
    pub labels: Vec<u8>,
    /// Disease-class mean minus healthy mean, per biomarker.
    pub shift: IndexMap<String, f64>,
    pub indicator_perf: IndexMap<String, SensSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCohort {
    pub cohort: Cohort,
    pub truth: GroundTruth,
}

/// Columns: `age`, `highrisk`, `CBC`, `RC`, then one binary column per
/// configured indicator. Exactly `round(n · prevalence)` rows are disease
/// rows, placed uniformly at random.
pub fn generate_scd_cohort(params: &ScdGenParams) -> Result<GeneratedCohort> {
    params.validate()?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut labels = vec![0u8; n];
    for i in rand::seq::index::sample(&mut rng, n, params.disease_count()) {
        labels[i] = 1;
    }

    let normal = |m: f64, s: f64| Normal::new(m, s).expect("validated sd");
    let cbc_h = normal(params.healthy_cbc_mean, params.healthy_cbc_sd);
    let cbc_d = normal(params.scd_cbc_mean, params.scd_cbc_sd);
    let (rc_lo, rc_hi) = params.healthy_rc_range;
    let rc_d = normal(params.scd_rc_mean, params.scd_rc_sd);

    let mut age = Vec::with_capacity(n);
    let mut highrisk = Vec::with_capacity(n);
    let mut cbc = Vec::with_capacity(n);
    let mut rc = Vec::with_capacity(n);
    let mut indicators: Vec<Vec<u8>> = vec![Vec::with_capacity(n); params.indicators.len()];
    for &d in &labels {
        let sick = d == 1;
        age.push(rng.random::<f64>() * params.max_age);
        let hr_rate = if sick {
            params.highrisk_rate_disease
        } else {
            params.highrisk_rate_healthy
        };
        highrisk.push(rng.random_bool(hr_rate) as u8);
        if sick {
            cbc.push(cbc_d.sample(&mut rng));
            rc.push(rc_d.sample(&mut rng));
        } else {
            cbc.push(cbc_h.sample(&mut rng));
            rc.push(rc_lo + (rc_hi - rc_lo) * rng.random::<f64>());
        }
        for (spec, col) in params.indicators.iter().zip(indicators.iter_mut()) {
            let p = if sick {
                spec.sensitivity
            } else {
                1.0 - spec.specificity
            };
            col.push(rng.random_bool(p) as u8);
        }
    }

    let mut cohort = Cohort::with_rows(n);
    cohort.insert("age", Column::Continuous(age))?;
    cohort.insert("highrisk", Column::Binary(highrisk))?;
    cohort.insert("CBC", Column::Continuous(cbc))?;
    cohort.insert("RC", Column::Continuous(rc))?;
    for (spec, col) in params.indicators.iter().zip(indicators) {
        cohort.insert(spec.name.clone(), Column::Binary(col))?;
    }

    let mut shift = IndexMap::new();
    shift.insert("CBC".to_string(), params.scd_cbc_mean - params.healthy_cbc_mean);
    shift.insert("RC".to_string(), params.scd_rc_mean - params.healthy_rc_mean());
    let indicator_perf = params
        .indicators
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                SensSpec {
                    sensitivity: s.sensitivity,
                    specificity: s.specificity,
                },
            )
        })
        .collect();

    Ok(GeneratedCohort {
        cohort,
        truth: GroundTruth {
            labels,
            shift,
            indicator_perf,
        },
    })
}
