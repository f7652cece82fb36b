use std::hint::black_box;

use benjamin_core::moment::{ControlProblem, MomentControl};
use benjamin_core::operators::{BumpProfile, ControlOperator};
use benjamin_core::parallel::{par_map, seq_map};
use benjamin_core::random::{derive_seed, random_pair, random_state};
use benjamin_core::spectrum::Spectrum;
use benjamin_core::stabilization::{simulate_closed_loop, FeedbackLaw};
use criterion::{criterion_group, criterion_main, Criterion};

const N: usize = 16;

fn grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &alpha in &[0.1, 1.0, 7.0 / 3.0] {
        for &mu in &[0.0, 0.3] {
            for &t in &[0.05, 1.0] {
                out.push((alpha, mu, t));
            }
        }
    }
    out
}

fn control_point(op: &ControlOperator, &(alpha, mu, t): &(f64, f64, f64)) -> f64 {
    let spec = Spectrum::new(alpha, mu, N).unwrap();
    let mc = MomentControl::new(op, &spec, t).unwrap();
    let (u0, u1) = random_pair(derive_seed(1, (alpha * 100.0 + mu * 10.0 + t) as u64), N, 0.0);
    let problem = ControlProblem::new(alpha, mu, t, 0.0, u0, u1).unwrap();
    let signal = mc.synthesize(&problem).unwrap();
    mc.report(&problem, &signal).unwrap().terminal_residual
}

fn stabilize_point(op: &ControlOperator, &(alpha, mu, _): &(f64, f64, f64)) -> f64 {
    let spec = Spectrum::new(alpha, mu, N).unwrap();
    let law = FeedbackLaw::simple(op, &spec).unwrap();
    let times: Vec<f64> = (0..101).map(|i| i as f64).collect();
    let traj = simulate_closed_loop(&random_state(7, N, 0.0, 1.0), &law, &times).unwrap();
    traj.fluctuation_norms(0.0).last().copied().unwrap()
}

fn sweeps(c: &mut Criterion) {
    let op = ControlOperator::new(BumpProfile::default_bump(2 * N), N).unwrap();
    let points = grid();
    let mut group = c.benchmark_group("control_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| black_box(par_map(&points, |p| control_point(&op, p)))));
    group.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&points, |p| control_point(&op, p)))));
    group.finish();

    let mut group = c.benchmark_group("stabilize_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| black_box(par_map(&points, |p| stabilize_point(&op, p)))));
    group.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&points, |p| stabilize_point(&op, p)))));
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
