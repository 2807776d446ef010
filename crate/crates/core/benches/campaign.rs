use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cen_meta::model::{db_to_linear, NetworkConfig};
use cen_meta::montecarlo::{run_campaign, MonteCarloConfig};
use cen_meta::optimizer::{coordinate_descent, Objective, OptimizationProblem};
use cen_meta::parallel::Execution;

fn executions() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn campaign(c: &mut Criterion) {
    let cfg = NetworkConfig::default();
    let mc = MonteCarloConfig::for_network(&cfg, 200, 200, 42);
    let tau = db_to_linear(5.0);
    let mut group = c.benchmark_group("campaign");
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_campaign(black_box(&cfg), &mc, tau, exec).unwrap())
        });
    }
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let cfg = NetworkConfig::default();
    let problem = OptimizationProblem::with_defaults(Objective::Meta { x0: 0.9 }, db_to_linear(5.0), &cfg).unwrap();
    let mut group = c.benchmark_group("coordinate_descent");
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| coordinate_descent(black_box(&problem), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10).configure_from_args();
    targets = campaign, optimizer
);
criterion_main!(benches);
