use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elfving_core::optimizer::{default_penalty_scale, objective};
use elfving_core::oracle::lp_elfving;
use elfving_core::{signs_and_weights, solve, CurveModel, GridSpec, ProblemSpec, SolveSettings, Tolerances, Vector};

fn basis(k: usize, j: usize) -> Vector {
    let mut c = Vector::zeros(k);
    c[j - 1] = 1.0;
    c
}

/// Extrema of the degree k-1 Chebyshev polynomial on [-1, 1].
fn nodes(k: usize) -> Vec<f64> {
    (0..k).map(|i| (std::f64::consts::PI * i as f64 / (k - 1) as f64).cos()).collect()
}

fn closed_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("signs_and_weights");
    for k in [4, 6, 10] {
        let model = CurveModel::polynomial(k).unwrap();
        let points: Vec<Vector> = nodes(k).iter().map(|&u| model.features(u).unwrap()).collect();
        let target = basis(k, k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| signs_and_weights(black_box(&points), &target, None, &Tolerances::default()).unwrap())
        });
    }
    group.finish();
}

fn objective_eval(c: &mut Criterion) {
    let k = 10;
    let spec = ProblemSpec::curve(CurveModel::polynomial(k).unwrap(), basis(k, 2)).unwrap();
    let us = nodes(k);
    let penalty = default_penalty_scale(&spec.c);
    c.bench_function("objective/k10", |b| b.iter(|| objective(black_box(&us), &spec, penalty)));
}

fn full_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (k, j) in [(4, 2), (6, 4)] {
        let spec = ProblemSpec::curve(CurveModel::polynomial(k).unwrap(), basis(k, j)).unwrap();
        let settings = SolveSettings { starts: 10, ..SolveSettings::default() };
        group.bench_function(format!("k{k}_e{j}"), |b| b.iter(|| solve(&spec, &settings).unwrap()));
    }
    group.finish();
}

fn lp_oracle(c: &mut Criterion) {
    let spec = ProblemSpec::curve(CurveModel::polynomial(4).unwrap(), basis(4, 2)).unwrap();
    let mut group = c.benchmark_group("lp_elfving");
    group.sample_size(10);
    group.bench_function("k4_2001", |b| b.iter(|| lp_elfving(&spec, &GridSpec::default(), 9.0).unwrap()));
    group.finish();
}

criterion_group!(benches, closed_form, objective_eval, full_solve, lp_oracle);
criterion_main!(benches);
