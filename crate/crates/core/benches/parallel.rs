use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use margin_scope::simcore::{sample_haar_state, HaarConvention};
use margin_scope::toymodel::{sample_oz_values, ToyParams};
use margin_scope::varmodels::{generate_dataset, Entangler, Model, ModelKind};
use margin_scope::{par, stats, RandomStream};

// Each workload runs once on a single worker and once on the default pool.
fn pools() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("parallel", 0)]
}

fn toy_sampling(c: &mut Criterion) {
    let params = ToyParams::new(9).unwrap();
    let mut group = c.benchmark_group("toy_oz_samples");
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_threads(threads, || sample_oz_values(&params, 20_000, RandomStream::new(1))))
        });
    }
    group.finish();
}

fn haar_states(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar_states_n10");
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    par::map_range(256, |i| {
                        let s =
                            sample_haar_state(10, HaarConvention::RealSphere, RandomStream::new(2).substream(i as u64));
                        s.map(|s| s.probabilities()[0]).unwrap_or(0.0)
                    })
                })
            })
        });
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let data = generate_dataset(3, 12, 0).unwrap();
    let model = Model::random(ModelKind::Reupload, 4, 4, Entangler::Ring, RandomStream::new(4)).unwrap();
    let prepared = model.prepare(&data.train).unwrap();
    let mut group = c.benchmark_group("reupload_gradient");
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_threads(threads, || model.gradient(black_box(&prepared))))
        });
    }
    group.finish();
}

fn bootstrap(c: &mut Criterion) {
    let values: Vec<f64> = (0..5_000).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut group = c.benchmark_group("bootstrap_mean");
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    stats::bootstrap(values.len(), 200, RandomStream::new(5), |idx| {
                        vec![idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64]
                    })
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, toy_sampling, haar_states, gradient, bootstrap);
criterion_main!(benches);
