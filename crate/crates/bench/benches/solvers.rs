use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tdsec_core::{build_random_ensemble, compute_d, optimal_povm, pretty_good_measurement, Purity, SolverOptions};

fn eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig");
    for dim in [4, 16, 64] {
        let ens = build_random_ensemble(1, dim, 1, Purity::Mixed).unwrap();
        let rho = ens.entries()[0].state.clone();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &rho, |b, rho| b.iter(|| black_box(rho).eig()));
    }
    group.finish();
}

fn distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_d");
    for (n_bits, dim) in [(2, 4), (4, 8), (6, 8)] {
        let ens = build_random_ensemble(n_bits, dim, 2, Purity::Mixed).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{n_bits}bit"), dim), &ens, |b, ens| {
            b.iter(|| compute_d(black_box(ens)))
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let mut group = c.benchmark_group("discrimination");
    group.sample_size(20);
    for (n_bits, dim) in [(2, 3), (3, 4)] {
        let ens = build_random_ensemble(n_bits, dim, 3, Purity::Mixed).unwrap();
        let label = format!("{n_bits}bit-dim{dim}");
        group.bench_with_input(BenchmarkId::new("pgm", &label), &ens, |b, ens| {
            b.iter(|| pretty_good_measurement(black_box(ens)))
        });
        group.bench_with_input(BenchmarkId::new("iterative", &label), &ens, |b, ens| {
            b.iter(|| optimal_povm(black_box(ens), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eig, distance, solvers);
criterion_main!(benches);
