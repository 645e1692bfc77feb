use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sesqui_core::analyzer::{residual_closed_form, residual_direct};
use sesqui_core::frenet::{frame_scalars, frenet_apparatus};
use sesqui_core::report::{cmd_analyze, AnalyzeConfig, EXAMPLE_CURVE};
use sesqui_core::variational::{discrete_energy, energy_gradient};
use sesqui_core::{CurveSpec, DeltaPair, DiscreteCurve, Grid, SignConvention};

fn example() -> CurveSpec {
    CurveSpec::parse_file(EXAMPLE_CURVE).expect("built-in example parses")
}

fn frenet(c: &mut Criterion) {
    let spec = example();
    let grid = Grid::closed(0.0, 2.0 * PI, 256);
    c.bench_function("frenet_apparatus/256", |b| {
        b.iter(|| frenet_apparatus(black_box(&spec), &grid, 1e-7).unwrap())
    });
}

fn residuals(c: &mut Criterion) {
    let spec = example();
    let grid = Grid::closed(0.0, 2.0 * PI, 256);
    let data = frenet_apparatus(&spec, &grid, 1e-7).unwrap();
    let scalars = frame_scalars(&data).unwrap();
    let delta = DeltaPair::new(-8.0, 2.0);
    c.bench_function("residual_direct/256", |b| {
        b.iter(|| residual_direct(&spec, black_box(&data), -3.0, delta).unwrap())
    });
    c.bench_function("residual_closed_form/256", |b| {
        b.iter(|| residual_closed_form(black_box(&data), &scalars, -3.0, delta, SignConvention::Corrected).unwrap())
    });
}

fn energy(c: &mut Criterion) {
    let curve = DiscreteCurve::sample(&example(), &Grid::closed(0.0, PI, 128)).unwrap();
    let delta = DeltaPair::new(-8.0, 2.0);
    c.bench_function("discrete_energy/128", |b| b.iter(|| discrete_energy(black_box(&curve), delta)));
    c.bench_function("energy_gradient/128", |b| b.iter(|| energy_gradient(black_box(&curve), delta)));
}

fn analyze(c: &mut Criterion) {
    let spec = example();
    let config = AnalyzeConfig { grid: Grid::closed(0.0, 2.0 * PI, 128), ..AnalyzeConfig::default() };
    let mut group = c.benchmark_group("cmd_analyze");
    group.sample_size(10);
    group.bench_function("example/128", |b| b.iter(|| cmd_analyze(black_box(&spec), &config).unwrap()));
    group.finish();
}

criterion_group!(benches, frenet, residuals, energy, analyze);
criterion_main!(benches);
