use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rayon::ThreadPoolBuilder;

use phenovb::data_io::{generate_scd_cohort, standardize, ScdGenParams};
use phenovb::gmm::{e_step, fit_gmm, m_step, GmmOptions, GmmPriorSpec, Responsibilities};
use phenovb::init::{init_dbscan, init_kmeans};

fn cohort_matrix(n: usize) -> DMatrix<f64> {
    let generated = generate_scd_cohort(&ScdGenParams {
        n,
        ..ScdGenParams::default()
    })
    .expect("generator");
    standardize(&generated.cohort, &["CBC", "RC"])
        .expect("standardize")
        .matrix(&["CBC", "RC"])
        .expect("matrix")
}

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = ThreadPoolBuilder::new().build().expect("pool");
    let label = format!("default-{}", default.current_num_threads());
    vec![
        ("1-thread".to_string(), ThreadPoolBuilder::new().num_threads(1).build().expect("pool")),
        (label, default),
    ]
}

fn bench_e_step(c: &mut Criterion) {
    let data = cohort_matrix(50_000);
    let k = 4;
    let prior = GmmPriorSpec::default().resolve(&data, k).expect("prior");
    let labels = init_kmeans(&data, k, 1).expect("kmeans").labels;
    let state = m_step(&Responsibilities::from_labels(&labels, k), &data, &prior).expect("m_step");
    let mut group = c.benchmark_group("e_step_50k");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| e_step(black_box(&state), black_box(&data))))
        });
    }
    group.finish();
}

fn bench_dbscan(c: &mut Criterion) {
    let data = cohort_matrix(10_000);
    let mut group = c.benchmark_group("dbscan_10k");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| init_dbscan(black_box(&data), 0.15, 5)))
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let data = cohort_matrix(10_000);
    let k = 2;
    let prior = GmmPriorSpec::with_alpha(0.001).resolve(&data, k).expect("prior");
    let labels = init_kmeans(&data, k, 1).expect("kmeans").labels;
    let opts = GmmOptions {
        max_iters: 50,
        ..GmmOptions::default()
    };
    let mut group = c.benchmark_group("fit_gmm_10k");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| fit_gmm(black_box(&data), k, &prior, &labels, &opts).expect("fit")))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_e_step, bench_dbscan, bench_fit);
criterion_main!(benches);
