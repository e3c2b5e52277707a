use std::hint::black_box;

use circuit_vi::oracle::{exact_log_partition, grid_log_partition};
use circuit_vi::{build, BuildConfig, ElboPlan, ElboWorkspace, Polynomial};
use circuit_vi_bench::{circuit, ising};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_entropy_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("entropy_gradient");
    for k in [16, 64, 256, 1024] {
        let built = circuit(256, k);
        let empty = Polynomial::zero(256);
        let plan = ElboPlan::new(&built.circuit, &empty).unwrap();
        let mut ws = ElboWorkspace::new(&plan);
        let mut grad = vec![0.0; built.circuit.num_params()];
        group.throughput(Throughput::Elements(built.circuit.size().edges as u64));
        group.bench_with_input(BenchmarkId::from_parameter(k), &built, |b, built| {
            b.iter(|| {
                let out = plan
                    .evaluate(&built.circuit, built.circuit.params(), 0.0, &mut ws, Some(&mut grad))
                    .unwrap();
                black_box(out.entropy)
            })
        });
    }
    group.finish();
}

fn bench_elbo_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("elbo_gradient");
    for (side, k) in [(8, 1), (8, 64), (16, 64), (32, 16)] {
        let poly = ising(side, 3);
        let built = circuit(side * side, k);
        let plan = ElboPlan::new(&built.circuit, &poly.clone().with_num_vars(built.circuit.num_vars()).unwrap())
            .unwrap();
        let mut ws = ElboWorkspace::new(&plan);
        let mut grad = vec![0.0; built.circuit.num_params()];
        group.bench_function(format!("{side}x{side}/k{k}"), |b| {
            b.iter(|| {
                let out = plan
                    .evaluate(&built.circuit, built.circuit.params(), 0.0, &mut ws, Some(&mut grad))
                    .unwrap();
                black_box(out.total)
            })
        });
    }
    group.finish();
}

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for (n, k) in [(64, 64), (256, 256), (1024, 64)] {
        group.bench_function(format!("n{n}/k{k}"), |b| {
            b.iter(|| build(&BuildConfig::new(black_box(n), k)).unwrap())
        });
    }
    group.finish();
}

fn bench_oracles(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let small = ising(4, 1);
    group.bench_function("enumerate/4x4", |b| b.iter(|| exact_log_partition(black_box(&small)).unwrap()));
    let grid = ising(10, 1);
    group.bench_function("transfer/10x10", |b| {
        b.iter(|| grid_log_partition(10, 10, black_box(&grid)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_entropy_gradient, bench_elbo_gradient, bench_build, bench_oracles);
criterion_main!(benches);
