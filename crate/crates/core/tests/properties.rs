use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use phenovb::data_io::to_json_string;
use phenovb::gmm::{compute_elbo, e_step, m_step, GmmPriorSpec, Responsibilities};
use phenovb::init::init_dbscan;
use phenovb::regression::{predict_prob, sens_spec, LogitFit, LogitPrior};

fn points(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (4..max).prop_flat_map(|n| {
        prop::collection::vec(-10.0..10.0f64, n * 2).prop_map(move |v| DMatrix::from_row_slice(n, 2, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn responsibilities_are_stochastic(data in points(60), k in 1usize..5, seed in 0u64..1000) {
        let labels: Vec<usize> = (0..data.nrows()).map(|i| (i as u64 * 31 + seed) as usize % k).collect();
        let prior = GmmPriorSpec::default().resolve(&data, k).unwrap();
        let state = m_step(&Responsibilities::from_labels(&labels, k), &data, &prior).unwrap();
        let resp = e_step(&state, &data);
        for i in 0..data.nrows() {
            prop_assert!((resp.r.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert!(resp.r.row(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        prop_assert!((resp.nk.sum() - data.nrows() as f64).abs() < 1e-9);
    }

    #[test]
    fn coordinate_steps_do_not_lower_the_elbo(data in points(50), seed in 0u64..1000) {
        let k = 3;
        let labels: Vec<usize> = (0..data.nrows()).map(|i| (i as u64 * 7 + seed) as usize % k).collect();
        let prior = GmmPriorSpec::default().resolve(&data, k).unwrap();
        let mut resp = Responsibilities::from_labels(&labels, k);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..5 {
            let state = m_step(&resp, &data, &prior).unwrap();
            resp = e_step(&state, &data);
            let elbo = compute_elbo(&state, &resp, &data, &prior);
            prop_assert!(elbo >= last - 1e-8 * (1.0 + last.abs()));
            last = elbo;
        }
    }

    #[test]
    fn dbscan_ignores_row_order(data in points(80), eps in 0.5..4.0f64, min_pts in 2usize..6, rot in 0usize..80) {
        let n = data.nrows();
        let shift = rot % n;
        let order: Vec<usize> = (0..n).map(|r| (r + shift) % n).collect();
        let moved = DMatrix::from_fn(n, 2, |r, j| data[(order[r], j)]);
        let a = init_dbscan(&data, eps, min_pts);
        let b = init_dbscan(&moved, eps, min_pts);
        prop_assert_eq!(a.cluster_count, b.cluster_count);
        let mut map = vec![None; a.cluster_count];
        for (r, &orig) in order.iter().enumerate() {
            match (a.labels[orig], b.labels[r]) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    let slot = map[x].get_or_insert(y);
                    prop_assert_eq!(*slot, y);
                }
                _ => prop_assert!(false, "noise set differs"),
            }
        }
    }

    #[test]
    fn json_floats_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..50)) {
        let text = to_json_string(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.len(), values.len());
        for (a, b) in values.iter().zip(&back) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sens_spec_is_a_probability_pair(b0 in -30.0..30.0f64, b1 in -30.0..30.0f64) {
        let prior = LogitPrior::isotropic(2, 1.0).unwrap();
        let fit = LogitFit {
            m: DVector::from_column_slice(&[b0, b1]),
            s: prior.s0().clone(),
            xi: DVector::zeros(0),
            elbo_trace: Default::default(),
        };
        let ss = sens_spec(&fit).unwrap();
        prop_assert!((0.0..=1.0).contains(&ss.sensitivity));
        prop_assert!((0.0..=1.0).contains(&ss.specificity));
    }

    #[test]
    fn predictions_follow_the_linear_predictor(xs in prop::collection::vec(-5.0..5.0f64, 2..40), b1 in 0.1..3.0f64) {
        let prior = LogitPrior::isotropic(2, 1.0).unwrap();
        let fit = LogitFit {
            m: DVector::from_column_slice(&[-0.3, b1]),
            s: prior.s0().clone(),
            xi: DVector::zeros(0),
            elbo_trace: Default::default(),
        };
        let x = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let p = predict_prob(&fit, &x).unwrap();
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if xs[i] < xs[j] {
                    prop_assert!(p[i] <= p[j]);
                }
            }
        }
    }
}
