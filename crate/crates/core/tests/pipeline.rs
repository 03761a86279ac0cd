mod common;

use nalgebra::{DMatrix, DVector};

use phenovb::data_io::{generate_scd_cohort, Cohort, Column, GeneratedCohort, ScdGenParams};
use phenovb::gmm::{fit_gmm, GmmOptions, GmmPriorSpec};
use phenovb::init::{initialize, InitConfig};
use phenovb::pipeline::{run_model, select_disease_component, DiseaseComponentRule, PhenoConfig};
use phenovb::regression::{fit_linreg_vb, LinRegPrior, RegressionOptions};

fn small_cohort(seed: u64) -> GeneratedCohort {
    generate_scd_cohort(&ScdGenParams {
        n: 2000,
        prevalence: 0.02,
        seed,
        ..ScdGenParams::default()
    })
    .unwrap()
}

fn dbscan_config() -> PhenoConfig {
    PhenoConfig {
        gmm_prior: GmmPriorSpec::with_alpha(0.001),
        init: InitConfig::dbscan(0.15, 5, 1),
        gmm_opts: GmmOptions {
            stop_if_elbo_reverse: true,
            ..GmmOptions::default()
        },
        ..PhenoConfig::default()
    }
}

#[test]
fn recovers_generator_shift() {
    for seed in [1, 2, 3] {
        let generated = small_cohort(seed);
        let result = run_model(&generated.cohort, &dbscan_config()).unwrap();
        for (name, truth) in &generated.truth.shift {
            let est = result.biomarker_shift[name].signed_coef;
            assert!((est - truth).abs() <= 0.2 * truth.abs(), "seed {seed} {name}: {est} vs {truth}");
        }
    }
}

#[test]
fn soft_and_hard_labels_agree() {
    let result = run_model(&small_cohort(4).cohort, &dbscan_config()).unwrap();
    for (&l, &p) in result.latent_class.iter().zip(&result.soft_prob) {
        assert_eq!(l == 1, p >= 0.5);
    }
    assert!(!result.disease_class_empty);
}

#[test]
fn perfect_indicator() {
    let mut generated = generate_scd_cohort(&ScdGenParams {
        n: 4000,
        prevalence: 0.1,
        seed: 5,
        ..ScdGenParams::default()
    })
    .unwrap();
    let cfg = dbscan_config();
    let first = run_model(&generated.cohort, &cfg).unwrap();
    generated
        .cohort
        .insert("mirror", Column::Binary(first.latent_class.clone()))
        .unwrap();
    let cfg = PhenoConfig {
        indicator_columns: vec!["mirror".into()],
        ..cfg
    };
    let second = run_model(&generated.cohort, &cfg).unwrap();
    assert_eq!(second.latent_class, first.latent_class);
    let perf = second.indicator_perf["mirror"];
    assert!(perf.sensitivity >= 0.999, "{perf:?}");
    assert!(perf.specificity >= 0.999, "{perf:?}");
}

#[test]
fn indicator_recovers_generator_performance() {
    let generated = generate_scd_cohort(&ScdGenParams {
        n: 8000,
        prevalence: 0.05,
        seed: 6,
        ..ScdGenParams::default()
    })
    .unwrap();
    let cfg = PhenoConfig {
        indicator_columns: vec!["scd_code".into(), "hydroxyurea".into()],
        ..dbscan_config()
    };
    let result = run_model(&generated.cohort, &cfg).unwrap();
    for (name, truth) in &generated.truth.indicator_perf {
        let est = result.indicator_perf[name];
        assert!((est.sensitivity - truth.sensitivity).abs() < 0.06, "{name}: {est:?}");
        assert!((est.specificity - truth.specificity).abs() < 0.02, "{name}: {est:?}");
    }
}

#[test]
fn deterministic_given_seed() {
    let cohort = small_cohort(7).cohort;
    let cfg = PhenoConfig {
        init: InitConfig::kmeans(3),
        ..PhenoConfig::default()
    };
    assert_eq!(run_model(&cohort, &cfg).unwrap(), run_model(&cohort, &cfg).unwrap());
}

#[test]
fn component_relabelling_leaves_soft_labels_unchanged() {
    let cohort = phenovb::data_io::standardize(&small_cohort(8).cohort, &["CBC", "RC"]).unwrap();
    let data = cohort.matrix(&["CBC", "RC"]).unwrap();
    for k in [2, 3] {
        let prior = GmmPriorSpec::with_alpha(0.01).resolve(&data, k).unwrap();
        let init = initialize(&data, k, &InitConfig::kmeans(11)).unwrap();
        let shifted: Vec<usize> = init.labels.iter().map(|&l| (l + 1) % k).collect();
        let opts = GmmOptions::default();
        let a = fit_gmm(&data, k, &prior, &init.labels, &opts).unwrap();
        let b = fit_gmm(&data, k, &prior, &shifted, &opts).unwrap();
        let da = select_disease_component(&a.state, DiseaseComponentRule::SmallestWeight).unwrap();
        let db = select_disease_component(&b.state, DiseaseComponentRule::SmallestWeight).unwrap();
        assert_eq!(db, (da + 1) % k);
        assert!((a.resp.r.column(da) - b.resp.r.column(db)).amax() < 1e-9);
    }
}

#[test]
fn empty_disease_class_is_flagged() {
    // one blob and three components: the smallest one empties out
    let (blob, _) = common::blobs(&[[0.0, 0.0]], &[400], 12);
    let mut cohort = Cohort::new();
    cohort.insert("CBC", Column::Continuous(blob.column(0).iter().copied().collect())).unwrap();
    cohort.insert("RC", Column::Continuous(blob.column(1).iter().copied().collect())).unwrap();
    let cfg = PhenoConfig {
        k: 3,
        gmm_prior: GmmPriorSpec::with_alpha(1e-6),
        init: InitConfig::kmeans(2),
        ..PhenoConfig::default()
    };
    let result = run_model(&cohort, &cfg).unwrap();
    assert!(result.disease_class_empty);
    assert_eq!(result.disease_count(), 0);
    assert!(result.soft_prob.iter().all(|&p| p < 0.5));
    assert!(result.biomarker_shift.is_empty());
    assert!(result.regression_fits.biomarkers.is_empty());
}

fn with_ferritin(generated: &GeneratedCohort, unavailable_value: f64) -> (Cohort, Vec<u8>) {
    let mut cohort = generated.cohort.clone();
    let labels = &generated.truth.labels;
    let mut rng = common::rng(21);
    use rand::Rng;
    let avail: Vec<u8> = (0..cohort.n()).map(|_| u8::from(rng.random::<f64>() < 0.7)).collect();
    let values: Vec<f64> = (0..cohort.n())
        .map(|i| {
            if avail[i] == 0 {
                unavailable_value
            } else {
                50.0 + 30.0 * f64::from(labels[i]) + rng.random_range(-5.0..5.0)
            }
        })
        .collect();
    cohort.insert("ferritin", Column::Continuous(values)).unwrap();
    cohort.insert("ferritin_avail", Column::Binary(avail.clone())).unwrap();
    (cohort, avail)
}

#[test]
fn unavailable_rows_never_enter_the_biomarker_fit() {
    let generated = small_cohort(9);
    let mut cfg = PhenoConfig {
        biomarker_columns: vec!["CBC".into(), "ferritin".into()],
        ..dbscan_config()
    };
    cfg.biomarker_prior.healthy.insert("ferritin".into(), 50.0);
    let (low, avail) = with_ferritin(&generated, -1e3);
    let (high, _) = with_ferritin(&generated, 1e3);
    let a = run_model(&low, &cfg).unwrap();
    let b = run_model(&high, &cfg).unwrap();
    assert_eq!(a.regression_fits.biomarkers["ferritin"], b.regression_fits.biomarkers["ferritin"]);

    // delete the unavailable rows and refit directly
    let rows: Vec<usize> = (0..avail.len()).filter(|&i| avail[i] == 1).collect();
    let y_all = low.values("ferritin").unwrap();
    let x = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { 1.0 } else { f64::from(a.latent_class[rows[i]]) });
    let y: Vec<f64> = rows.iter().map(|&r| y_all[r]).collect();
    let prior = LinRegPrior::new(
        DVector::from_column_slice(&[50.0, 0.0]),
        DMatrix::from_diagonal(&DVector::from_column_slice(&[100.0, 100.0])),
        1.0,
        1.0,
    )
    .unwrap();
    let direct = fit_linreg_vb(&x, &y, &prior, &RegressionOptions::default()).unwrap();
    let rec = &a.regression_fits.biomarkers["ferritin"];
    assert_eq!(rec.n_obs, rows.len());
    assert!((rec.m_beta[1] - direct.m_beta[1]).abs() < 1e-12);
    assert!((a.biomarker_shift["ferritin"].signed_coef - 30.0).abs() < 3.0);
}

#[test]
fn config_validation_errors() {
    let cohort = small_cohort(10).cohort;
    let missing = PhenoConfig {
        gmm_columns: vec!["nope".into()],
        ..PhenoConfig::default()
    };
    assert!(run_model(&cohort, &missing).is_err());
    let non_binary = PhenoConfig {
        indicator_columns: vec!["CBC".into()],
        ..PhenoConfig::default()
    };
    assert!(run_model(&cohort, &non_binary).is_err());
}
