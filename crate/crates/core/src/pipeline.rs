//! Three-stage phenotyping: mixture latent class, biomarker shift
//! regressions, indicator sensitivity/specificity.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_io::{standardize, unstandardize, Cohort, Column};
use crate::gmm::{fit_gmm, ElboTrace, GmmOptions, GmmPriorSpec, GmmState, ScalarOrVec};
use crate::init::{initialize, InitConfig};
use crate::par;
use crate::regression::{
    fit_linreg_vb, fit_logit_cavi, sens_spec, LinRegFit, LinRegPrior, LogitFit, LogitPrior,
    RegressionOptions, SensSpec,
};
use crate::{Error, Result};

/// How the disease component is picked from the fitted mixture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiseaseComponentRule {
    /// Component with the smallest expected mixing weight.
    #[default]
    SmallestWeight,
    /// A fixed 0-based component index.
    Explicit(usize),
}

/// Diagonal Gaussian prior on the `[intercept, D]` indicator coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitPriorSpec {
    pub mean: ScalarOrVec,
    pub variance: ScalarOrVec,
}

impl Default for LogitPriorSpec {
    fn default() -> Self {
        Self {
            mean: ScalarOrVec::Scalar(0.0),
            variance: ScalarOrVec::Scalar(100.0),
        }
    }
}

impl LogitPriorSpec {
    pub fn resolve(&self, p: usize) -> Result<LogitPrior> {
        let mean = broadcast(&self.mean, p, "logit prior mean")?;
        let var = broadcast(&self.variance, p, "logit prior variance")?;
        LogitPrior::new(DVector::from_vec(mean), DMatrix::from_diagonal(&DVector::from_vec(var)))
    }
}

/// Prior for each biomarker regression `y = β0 + Σ βc·cov + βD·D + ε`.
///
/// The intercept is centred on the biomarker's healthy value (the observed
/// mean when not given), the other coefficients on zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiomarkerPriorSpec {
    pub healthy: BTreeMap<String, f64>,
    pub intercept_sd: f64,
    pub covariate_sd: f64,
    pub shift_mean: f64,
    pub shift_sd: f64,
    /// Inverse-gamma shape for the noise variance.
    pub c: f64,
    /// Inverse-gamma scale for the noise variance.
    pub d: f64,
}

impl Default for BiomarkerPriorSpec {
    fn default() -> Self {
        Self {
            healthy: BTreeMap::new(),
            intercept_sd: 10.0,
            covariate_sd: 10.0,
            shift_mean: 0.0,
            shift_sd: 10.0,
            c: 1.0,
            d: 1.0,
        }
    }
}

impl BiomarkerPriorSpec {
    fn resolve(&self, healthy: f64, covariates: usize) -> Result<LinRegPrior> {
        let p = covariates + 2;
        let mut mu = DVector::zeros(p);
        mu[0] = healthy;
        mu[p - 1] = self.shift_mean;
        let mut sd = vec![self.covariate_sd; p];
        sd[0] = self.intercept_sd;
        sd[p - 1] = self.shift_sd;
        let sigma = DMatrix::from_diagonal(&DVector::from_iterator(p, sd.iter().map(|s| s * s)));
        LinRegPrior::new(mu, sigma, self.c, self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhenoConfig {
    pub gmm_columns: Vec<String>,
    pub biomarker_columns: Vec<String>,
    /// Extra regressors for the biomarker stage, between intercept and D.
    pub covariate_columns: Vec<String>,
    pub indicator_columns: Vec<String>,
    pub k: usize,
    /// Z-score the mixture columns before fitting.
    pub standardize_gmm: bool,
    pub gmm_prior: GmmPriorSpec,
    pub init: InitConfig,
    pub gmm_opts: GmmOptions,
    pub logit_prior: LogitPriorSpec,
    pub biomarker_prior: BiomarkerPriorSpec,
    pub regression_opts: RegressionOptions,
    pub disease_component: DiseaseComponentRule,
}

impl Default for PhenoConfig {
    fn default() -> Self {
        Self {
            gmm_columns: vec!["CBC".into(), "RC".into()],
            biomarker_columns: vec!["CBC".into(), "RC".into()],
            covariate_columns: Vec::new(),
            indicator_columns: Vec::new(),
            k: 2,
            standardize_gmm: true,
            gmm_prior: GmmPriorSpec::default(),
            init: InitConfig::default(),
            gmm_opts: GmmOptions::default(),
            logit_prior: LogitPriorSpec::default(),
            biomarker_prior: BiomarkerPriorSpec::default(),
            regression_opts: RegressionOptions::default(),
            disease_component: DiseaseComponentRule::default(),
        }
    }
}

impl PhenoConfig {
    pub fn validate(&self, cohort: &Cohort) -> Result<()> {
        if self.gmm_columns.is_empty() {
            return Err(Error::InvalidParameter("gmm_columns is empty".into()));
        }
        if self.k == 0 || self.k > cohort.n() {
            return Err(Error::TooFewObservations { n: cohort.n(), k: self.k });
        }
        let all = self
            .gmm_columns
            .iter()
            .chain(&self.biomarker_columns)
            .chain(&self.covariate_columns)
            .chain(&self.indicator_columns);
        for name in all {
            cohort.column(name)?;
        }
        for name in &self.indicator_columns {
            if !matches!(cohort.column(name)?, Column::Binary(_)) {
                return Err(Error::InvalidParameter(format!(
                    "indicator column `{name}` is not binary"
                )));
            }
        }
        if let DiseaseComponentRule::Explicit(c) = self.disease_component {
            if c >= self.k {
                return Err(Error::InvalidParameter(format!(
                    "disease component {c} outside 0..{}",
                    self.k
                )));
            }
        }
        self.init.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiomarkerShift {
    /// `|signed_coef|`.
    pub shift: f64,
    pub signed_coef: f64,
    /// Posterior standard deviation of the coefficient.
    pub sd: f64,
}

/// Stage-2 fit in serialisable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiomarkerFitRecord {
    pub design: Vec<String>,
    pub n_obs: usize,
    pub m_beta: Vec<f64>,
    pub s_beta: Vec<Vec<f64>>,
    pub a_post: f64,
    pub b_post: f64,
    pub elbo_trace: ElboTrace,
}

impl BiomarkerFitRecord {
    fn new(design: Vec<String>, n_obs: usize, fit: LinRegFit) -> Self {
        Self {
            design,
            n_obs,
            m_beta: fit.m_beta.as_slice().to_vec(),
            s_beta: rows(&fit.s_beta),
            a_post: fit.a_post,
            b_post: fit.b_post,
            elbo_trace: fit.elbo_trace,
        }
    }
}

/// Stage-3 fit in serialisable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorFitRecord {
    pub m: Vec<f64>,
    pub s: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub elbo_trace: ElboTrace,
}

impl IndicatorFitRecord {
    fn new(fit: LogitFit) -> Self {
        Self {
            m: fit.m.as_slice().to_vec(),
            s: rows(&fit.s),
            xi: fit.xi.as_slice().to_vec(),
            elbo_trace: fit.elbo_trace,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionFits {
    pub biomarkers: BTreeMap<String, BiomarkerFitRecord>,
    pub indicators: BTreeMap<String, IndicatorFitRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenoResult {
    /// 1 for rows assigned to the disease class (`soft_prob ≥ 0.5`).
    pub latent_class: Vec<u8>,
    pub soft_prob: Vec<f64>,
    pub biomarker_shift: BTreeMap<String, BiomarkerShift>,
    pub indicator_perf: BTreeMap<String, SensSpec>,
    pub elbo_trace: ElboTrace,
    pub regression_fits: RegressionFits,
    pub disease_component: usize,
    /// No row reached the disease class; stages 2 and 3 were skipped.
    pub disease_class_empty: bool,
    pub config_echo: PhenoConfig,
}

impl PhenoResult {
    pub fn disease_count(&self) -> usize {
        self.latent_class.iter().filter(|&&l| l == 1).count()
    }
}

/// Smallest expected weight wins, ties to the lowest index.
pub fn select_disease_component(state: &GmmState, rule: DiseaseComponentRule) -> Result<usize> {
    let k = state.k();
    match rule {
        DiseaseComponentRule::Explicit(c) if c < k => Ok(c),
        DiseaseComponentRule::Explicit(c) => Err(Error::InvalidParameter(format!(
            "disease component {c} outside 0..{k}"
        ))),
        DiseaseComponentRule::SmallestWeight => {
            if k < 2 {
                return Err(Error::InvalidParameter(
                    "smallest-weight selection needs at least two components".into(),
                ));
            }
            let w = &state.mixing_weights;
            Ok((1..k).fold(0, |best, c| if w[c] < w[best] { c } else { best }))
        }
    }
}

pub fn run_model(cohort: &Cohort, cfg: &PhenoConfig) -> Result<PhenoResult> {
    cfg.validate(cohort)?;

    let gmm_cohort = if cfg.standardize_gmm {
        standardize(cohort, &cfg.gmm_columns)?
    } else {
        cohort.clone()
    };
    let data = gmm_cohort.matrix(&cfg.gmm_columns)?;
    let prior = cfg.gmm_prior.resolve(&data, cfg.k)?;
    let init = initialize(&data, cfg.k, &cfg.init)?;
    log::info!(
        "init found {} source clusters; component sizes {:?}",
        init.source_cluster_count,
        init.counts()
    );
    let fit = fit_gmm(&data, cfg.k, &prior, &init.labels, &cfg.gmm_opts)?;
    log::info!(
        "gmm stopped after {} iterations ({})",
        fit.trace.len(),
        fit.trace.stopped_because.as_str()
    );

    let disease = select_disease_component(&fit.state, cfg.disease_component)?;
    let soft_prob: Vec<f64> = fit.resp.r.column(disease).iter().copied().collect();
    let latent_class: Vec<u8> = soft_prob.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let empty = !latent_class.contains(&1);

    let mut result = PhenoResult {
        latent_class,
        soft_prob,
        biomarker_shift: BTreeMap::new(),
        indicator_perf: BTreeMap::new(),
        elbo_trace: fit.trace,
        regression_fits: RegressionFits::default(),
        disease_component: disease,
        disease_class_empty: empty,
        config_echo: cfg.clone(),
    };
    if empty {
        log::warn!("disease class is empty; skipping regression stages");
        return Ok(result);
    }

    let raw = unstandardize(cohort);
    let d: Vec<f64> = result.latent_class.iter().map(|&l| l as f64).collect();

    let biomarker_fits = par::map_slice(&cfg.biomarker_columns, |name| {
        fit_biomarker(&raw, name, &d, cfg).map(|rec| (name.clone(), rec))
    });
    for item in biomarker_fits {
        let (name, rec) = item?;
        let j = rec.m_beta.len() - 1;
        let coef = rec.m_beta[j];
        result.biomarker_shift.insert(
            name.clone(),
            BiomarkerShift {
                shift: coef.abs(),
                signed_coef: coef,
                sd: rec.s_beta[j][j].sqrt(),
            },
        );
        result.regression_fits.biomarkers.insert(name, rec);
    }

    let prior = cfg.logit_prior.resolve(2)?;
    let design = DMatrix::from_fn(d.len(), 2, |i, j| if j == 0 { 1.0 } else { d[i] });
    let indicator_fits = par::map_slice(&cfg.indicator_columns, |name| {
        let y = raw.values(name)?;
        let fit = fit_logit_cavi(&design, &y, &prior, &cfg.regression_opts)?;
        Ok::<_, Error>((name.clone(), sens_spec(&fit)?, fit))
    });
    for item in indicator_fits {
        let (name, perf, fit) = item?;
        result.indicator_perf.insert(name.clone(), perf);
        result
            .regression_fits
            .indicators
            .insert(name, IndicatorFitRecord::new(fit));
    }
    Ok(result)
}

/// Rows where the biomarker is observed: its `<name>_avail` flag is 1 (when
/// that column exists) and the value is finite.
pub fn observed_rows(cohort: &Cohort, biomarker: &str) -> Result<Vec<usize>> {
    let values = cohort.values(biomarker)?;
    let avail = match cohort.column(&format!("{biomarker}_avail")) {
        Ok(col) => Some(col.to_f64()),
        Err(Error::MissingColumn(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((0..cohort.n())
        .filter(|&i| values[i].is_finite() && avail.as_ref().is_none_or(|a| a[i] == 1.0))
        .collect())
}

fn fit_biomarker(raw: &Cohort, name: &str, d: &[f64], cfg: &PhenoConfig) -> Result<BiomarkerFitRecord> {
    let rows = observed_rows(raw, name)?;
    let y_all = raw.values(name)?;
    let covs = cfg
        .covariate_columns
        .iter()
        .map(|c| raw.values(c))
        .collect::<Result<Vec<_>>>()?;
    let p = covs.len() + 2;
    let x = DMatrix::from_fn(rows.len(), p, |i, j| {
        let r = rows[i];
        match j {
            0 => 1.0,
            j if j == p - 1 => d[r],
            j => covs[j - 1][r],
        }
    });
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("biomarker covariates"));
    }
    let y: Vec<f64> = rows.iter().map(|&r| y_all[r]).collect();
    let healthy = match cfg.biomarker_prior.healthy.get(name) {
        Some(&h) => h,
        None if y.is_empty() => 0.0,
        None => y.iter().sum::<f64>() / y.len() as f64,
    };
    let prior = cfg.biomarker_prior.resolve(healthy, covs.len())?;
    let fit = fit_linreg_vb(&x, &y, &prior, &cfg.regression_opts)?;
    let mut design = vec!["intercept".to_string()];
    design.extend(cfg.covariate_columns.iter().cloned());
    design.push("D".into());
    Ok(BiomarkerFitRecord::new(design, rows.len(), fit))
}

fn broadcast(v: &ScalarOrVec, p: usize, what: &str) -> Result<Vec<f64>> {
    match v {
        ScalarOrVec::Scalar(s) => Ok(vec![*s; p]),
        ScalarOrVec::Vec(v) if v.len() == p => Ok(v.clone()),
        ScalarOrVec::Vec(v) => Err(Error::InvalidParameter(format!(
            "{what} has {} entries, expected 1 or {p}",
            v.len()
        ))),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
