use criterion::{black_box, criterion_group, criterion_main, Criterion};

use gravcat_bench::{desk_noise, desk_params};
use gravcat_core::evolve::{integrate_strided, rk4_step};
use gravcat_core::gravcat::{initial_state, make_generator};
use gravcat_core::linalg::hermitian_eigen;
use gravcat_core::observables::concurrence_wootters;
use gravcat_core::stochastic::{ensemble_average_strided, sample_trajectory_strided};
use gravcat_core::PhysicalConstants;

fn linalg(c: &mut Criterion) {
    let k = PhysicalConstants::natural(1.0);
    let g = make_generator(&desk_params(), &k).unwrap();
    c.bench_function("hermitian_eigen_4x4", |b| {
        b.iter(|| hermitian_eigen(black_box(&g.h_eff), 1e-12).unwrap())
    });
    let rho = initial_state(0.4);
    c.bench_function("concurrence_wootters", |b| {
        b.iter(|| concurrence_wootters(black_box(&rho)).unwrap())
    });
}

fn lindblad(c: &mut Criterion) {
    let k = PhysicalConstants::natural(1.0);
    let g = make_generator(&desk_params(), &k).unwrap();
    let rho = initial_state(0.0);
    c.bench_function("rk4_step", |b| b.iter(|| rk4_step(&g, black_box(&rho), 1e-3).unwrap()));
    c.bench_function("integrate_1e4_steps", |b| {
        b.iter(|| integrate_strided(&g, &rho, 10.0, 1e-3, 1000).unwrap())
    });
}

fn unraveling(c: &mut Criterion) {
    let k = PhysicalConstants::natural(1.0);
    let p = desk_params();
    let noise = desk_noise(1e-3);
    let mut group = c.benchmark_group("unraveling");
    group.sample_size(10);
    group.bench_function("trajectory_1e3_steps", |b| {
        b.iter(|| sample_trajectory_strided(&p, &noise, 1.0, black_box(7), 100, &k).unwrap())
    });
    group.bench_function("ensemble_64x1e3", |b| {
        b.iter(|| ensemble_average_strided(&p, &noise, 1.0, 64, black_box(7), 100, &k).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linalg, lindblad, unraveling);
criterion_main!(benches);
