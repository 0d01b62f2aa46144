use std::hint::black_box;

use avqls_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn heat(n: usize) -> PreparedSystem {
    let (a, b, _) = heat_system(&ConductivityProfile::noisy_constant(1.0, 0.2, 1), &SourceSpec::exponential(2.0), n).unwrap();
    prepare(&a, &b, &PrepareOptions::default()).unwrap()
}

fn theta(len: usize) -> Vec<f64> {
    (0..len).map(|i| 0.37 * i as f64 - 1.1).collect()
}

fn ansatz(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_ansatz");
    for n in [4, 8, 12] {
        let cfg = AnsatzConfig::new(n, 2);
        let params: ParameterVector = theta(cfg.n_params()).into();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| apply_ansatz(black_box(&cfg), black_box(&params)).unwrap())
        });
    }
    group.finish();
}

fn bundle(c: &mut Criterion) {
    let mut group = c.benchmark_group("hessian_bundle");
    group.sample_size(20);
    for n in [3, 5, 7] {
        let system = heat(n);
        let model = build_cost_model(&system).unwrap();
        let cfg = AnsatzConfig::new(n, 2);
        let ev = Evaluator::new(&model, &cfg).unwrap();
        let t = theta(cfg.n_params());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| ev.bundle(black_box(&t), 0.4).unwrap())
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("propose_step");
    for n in [3, 5, 7] {
        let system = heat(n);
        let model = build_cost_model(&system).unwrap();
        let cfg = AnsatzConfig::new(n, 2);
        let b = Evaluator::new(&model, &cfg).unwrap().bundle(&theta(cfg.n_params()), 0.2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| propose_step(black_box(&b), 0.2, 1e-8, 0.01, &RootOptions::default()))
        });
    }
    group.finish();
}

criterion_group!(benches, ansatz, bundle, step);
criterion_main!(benches);
