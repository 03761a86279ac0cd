//! JSON persistence of pipeline results.

use std::path::Path;

use super::{to_json_string, write_json};
use crate::gmm::ElboTrace;
use crate::pipeline::PhenoResult;
use crate::{Error, Result};

pub fn result_to_string(result: &PhenoResult) -> Result<String> {
    to_json_string(result)
}

pub fn save_result(result: &PhenoResult, path: impl AsRef<Path>) -> Result<()> {
    write_json(result, path)
}

/// Parse and validate a result document.
pub fn result_from_str(text: &str) -> Result<PhenoResult> {
    let result: PhenoResult =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("result document: {e}")))?;
    validate(&result)?;
    Ok(result)
}

pub fn load_result(path: impl AsRef<Path>) -> Result<PhenoResult> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    result_from_str(&text)
}

fn check_trace(trace: &ElboTrace, what: &str) -> Result<()> {
    if trace.is_empty() || !trace.is_consistent() {
        return Err(Error::Malformed(format!(
            "{what}: {} values with {} deltas",
            trace.values.len(),
            trace.deltas.len()
        )));
    }
    Ok(())
}

fn validate(r: &PhenoResult) -> Result<()> {
    let malformed = |m: String| Err(Error::Malformed(m));
    if r.latent_class.len() != r.soft_prob.len() {
        return malformed(format!(
            "latent_class has {} rows but soft_prob has {}",
            r.latent_class.len(),
            r.soft_prob.len()
        ));
    }
    for (i, (&l, &p)) in r.latent_class.iter().zip(&r.soft_prob).enumerate() {
        if l > 1 || !(0.0..=1.0).contains(&p) || (l == 1) != (p >= 0.5) {
            return malformed(format!("row {i}: latent_class {l} inconsistent with soft_prob {p}"));
        }
    }
    if r.disease_class_empty != !r.latent_class.contains(&1) {
        return malformed("disease_class_empty disagrees with latent_class".into());
    }
    check_trace(&r.elbo_trace, "elbo_trace")?;
    for (name, fit) in &r.regression_fits.biomarkers {
        check_trace(&fit.elbo_trace, name)?;
    }
    for (name, fit) in &r.regression_fits.indicators {
        check_trace(&fit.elbo_trace, name)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::StopReason;
    use crate::pipeline::{BiomarkerShift, PhenoConfig, RegressionFits};
    use crate::regression::SensSpec;
    use std::collections::BTreeMap;

    fn sample(empty: bool) -> PhenoResult {
        let soft_prob = if empty { vec![0.1, 0.2, 0.3] } else { vec![0.1, 0.5, 0.9] };
        let latent_class = soft_prob.iter().map(|&p| u8::from(p >= 0.5)).collect();
        let mut biomarker_shift = BTreeMap::new();
        biomarker_shift.insert(
            "CBC".to_string(),
            BiomarkerShift {
                shift: 7.912345678901234,
                signed_coef: -7.912345678901234,
                sd: 0.01 / 3.0,
            },
        );
        let mut indicator_perf = BTreeMap::new();
        indicator_perf.insert(
            "scd_code".to_string(),
            SensSpec {
                sensitivity: 0.9,
                specificity: 1.0 - 1e-13,
            },
        );
        PhenoResult {
            latent_class,
            soft_prob,
            biomarker_shift,
            indicator_perf,
            elbo_trace: ElboTrace {
                values: vec![-10.0, -5.5, -5.25],
                deltas: vec![4.5, 0.25],
                stopped_because: StopReason::ElboReversed,
            },
            regression_fits: RegressionFits::default(),
            disease_component: 1,
            disease_class_empty: empty,
            config_echo: PhenoConfig::default(),
        }
    }

    #[test]
    fn round_trip() {
        let r = sample(false);
        assert_eq!(result_from_str(&result_to_string(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn empty_flag_round_trips() {
        let r = sample(true);
        let back = result_from_str(&result_to_string(&r).unwrap()).unwrap();
        assert!(back.disease_class_empty);
    }

    #[test]
    fn top_level_keys() {
        let v: serde_json::Value = serde_json::from_str(&result_to_string(&sample(false)).unwrap()).unwrap();
        for key in ["latent_class", "soft_prob", "biomarker_shift", "indicator_perf", "elbo_trace", "config_echo"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn truncated_trace_is_malformed() {
        let mut r = sample(false);
        r.elbo_trace.values.pop();
        let text = result_to_string(&r).unwrap();
        assert!(matches!(result_from_str(&text), Err(Error::Malformed(_))));
        let full = result_to_string(&sample(false)).unwrap();
        assert!(matches!(result_from_str(&full[..full.len() / 2]), Err(Error::Malformed(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = sample(false);
        save_result(&r, &path).unwrap();
        assert_eq!(load_result(&path).unwrap(), r);
    }
}
