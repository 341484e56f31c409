use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use coarselab_core::compact::level_of_norm;
use coarselab_core::cone::{subsequence_select, RampSchedule, TrigPolynomial};
use coarselab_core::lift::{boundary_witnesses, lift_boundary_map};
use coarselab_core::{model_by_key, BoundaryMap, FockTruncation, Point, Symbol};

fn toeplitz(c: &mut Criterion) {
    let mut g = c.benchmark_group("toeplitz");
    g.sample_size(10);
    for n in [32, 64, 128] {
        let fock = FockTruncation::new(n).unwrap();
        let radial = Symbol::by_key("radial:tanh").unwrap();
        let generic = Symbol::by_key("planewave:xi=1+0i").unwrap();
        g.bench_with_input(BenchmarkId::new("radial", n), &n, |b, _| {
            b.iter(|| fock.toeplitz(black_box(&radial)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("planewave", n), &n, |b, _| {
            b.iter(|| fock.toeplitz(black_box(&generic)).unwrap())
        });
    }
    g.finish();
}

fn displacement(c: &mut Criterion) {
    let mut g = c.benchmark_group("displacement");
    g.sample_size(10);
    for n in [64, 256] {
        let fock = FockTruncation::new(n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fock.displacement(black_box(Complex64::new(1.0, 0.5))))
        });
    }
    g.finish();
}

fn lift(c: &mut Criterion) {
    let model = model_by_key("radial-Z2").unwrap();
    let window = 64.0;
    let levels = level_of_norm(window);
    let phi = BoundaryMap::identity();
    let mut g = c.benchmark_group("lift");
    g.sample_size(10);
    g.bench_function("witnesses", |b| {
        b.iter(|| boundary_witnesses(model.as_ref(), black_box(levels), 0.0).unwrap())
    });
    let table = Arc::new(boundary_witnesses(model.as_ref(), levels, 0.0).unwrap());
    g.bench_function("build", |b| {
        b.iter(|| lift_boundary_map(&phi, model.clone(), table.clone(), window, 0.0).unwrap())
    });
    let f = lift_boundary_map(&phi, model.clone(), table, window, 0.0).unwrap();
    let x = Point::new(vec![40, -17]);
    g.bench_function("apply", |b| b.iter(|| f.apply(black_box(&x))));
    g.finish();
}

fn cone(c: &mut Criterion) {
    let family = vec![TrigPolynomial::by_key("exp:1").unwrap()];
    let mut g = c.benchmark_group("cone");
    g.sample_size(10);
    for (size, ramps) in [(128, 8), (512, 12)] {
        let sched = RampSchedule::geometric(size, ramps);
        g.bench_with_input(BenchmarkId::new("select", size), &size, |b, _| {
            b.iter(|| subsequence_select(&|_| family.clone(), &sched, 5).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, toeplitz, displacement, lift, cone);
criterion_main!(benches);
