use std::hint::black_box;

use atp_bench::mixed_instance;
use atp_core::sim::PreparedPolicy;
use atp_core::{generate_path, solve_class_thresholds, solve_split, PolicyKind, SizeDistribution};
use criterion::{criterion_group, criterion_main, Criterion};

fn inverse_partial_expectation(c: &mut Criterion) {
    let laws = [
        ("uniform", SizeDistribution::uniform(0.0, 1.0).unwrap()),
        ("exponential", SizeDistribution::exponential(2.0).unwrap()),
        ("truncated_normal", SizeDistribution::truncated_normal(0.4, 0.3, 1.5).unwrap()),
    ];
    let mut group = c.benchmark_group("inverse_partial_expectation");
    for (name, d) in &laws {
        let target = 0.3 * d.mean();
        group.bench_function(*name, |b| b.iter(|| d.inverse_partial_expectation(black_box(target))));
    }
    group.finish();
}

fn class_thresholds(c: &mut Criterion) {
    let inst = mixed_instance(4, 1000);
    let class = &inst.classes()[0];
    let c_tilde = vec![2.0; 4];
    c.bench_function("class_thresholds_m4", |b| {
        b.iter(|| solve_class_thresholds(class, black_box(&c_tilde), 10, 1000).unwrap())
    });
}

fn capacity_split(c: &mut Criterion) {
    let inst = mixed_instance(3, 1000);
    let mut group = c.benchmark_group("capacity_split");
    group.sample_size(10);
    group.bench_function("n3_m3", |b| b.iter(|| solve_split(black_box(&inst)).unwrap()));
    group.finish();
}

fn atp1_path(c: &mut Criterion) {
    let inst = mixed_instance(3, 1000);
    let policy = PreparedPolicy::new(&inst, PolicyKind::Atp1).unwrap();
    let path = generate_path(&inst, inst.horizon(), 1).unwrap();
    let mut group = c.benchmark_group("policy_path");
    group.sample_size(20);
    group.bench_function("atp1_T1000", |b| b.iter(|| policy.run(&inst, black_box(&path)).unwrap()));
    group.finish();
}

criterion_group!(benches, inverse_partial_expectation, class_thresholds, capacity_split, atp1_path);
criterion_main!(benches);
