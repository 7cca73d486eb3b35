use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mcflow_bench::bubble_fixture;
use mcflow_core::conformal::{flow_rhs, mean_curvature};
use mcflow_core::flow::{step, FlowConfig, FlowState, StepResult};
use mcflow_core::spharm::{analyze, synthesize, GridField};

fn bench_transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transforms");
    for l_max in [32usize, 64, 128] {
        let (spec, u) = bubble_fixture(l_max, 0.5);
        let coeffs = analyze(&u);
        group.bench_with_input(BenchmarkId::new("analyze", l_max), &u, |b, u| {
            b.iter(|| black_box(analyze(u)))
        });
        group.bench_with_input(BenchmarkId::new("synthesize", l_max), &coeffs, |b, hc| {
            b.iter(|| black_box(synthesize(hc, &spec).unwrap()))
        });
    }
    group.finish();
}

fn bench_curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("conformal");
    for l_max in [32usize, 64] {
        let (spec, u) = bubble_fixture(l_max, 0.5);
        let f = GridField::constant(&spec, 1.0);
        group.bench_with_input(BenchmarkId::new("mean_curvature", l_max), &u, |b, u| {
            b.iter(|| black_box(mean_curvature(u).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("flow_rhs", l_max), &u, |b, u| {
            b.iter(|| black_box(flow_rhs(u, &f).unwrap()))
        });
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow");
    group.sample_size(20);
    for l_max in [32usize, 48] {
        let cfg = FlowConfig {
            l_max,
            ..FlowConfig::default()
        };
        let spec = cfg.build_grid().unwrap();
        let u0 = GridField::constant(&spec, 1.0);
        let f = GridField::from_fn(&spec, |p| 1.5 - 0.5 * p[2] * p[2]);
        let state = FlowState::new(0, 0.0, u0, &f).unwrap();
        group.bench_with_input(BenchmarkId::new("rk4_step", l_max), &state, |b, s| {
            b.iter(|| match step(s, &f, 1e-3, &cfg).unwrap() {
                StepResult::Accepted(next) => black_box(next),
                StepResult::Rejected { .. } => unreachable!(),
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_transforms, bench_curvature, bench_step);
criterion_main!(benches);
