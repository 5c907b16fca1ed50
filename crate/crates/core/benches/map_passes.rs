use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use siren_core::analysis::{build_uncertainty_map, siren, SirenMode, SirenParams};
use siren_core::belief::{
    apply_fov, derive_prior, prob_to_logodds, unknown_grid, Beam, FovModel, OccupancyGrid, PriorSpec,
};
use siren_core::dispersion::{GaussianBelief, PolarMeasurement};
use siren_core::grid::{GridGeometry, GridLayer, Semantic};
use siren_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn textured(g: GridGeometry, beta: f64) -> GridLayer {
    let values = (0..g.len())
        .map(|i| prob_to_logodds((beta * (1.0 + (i % 97) as f64 * 0.3)).min(0.9)).unwrap())
        .collect();
    GridLayer::from_values(g, Semantic::LogOdds, values).unwrap()
}

fn full_map(c: &mut Criterion) {
    let prior = derive_prior(&PriorSpec::planar(1.0, 0.1, 0.5).unwrap()).unwrap();
    let params = SirenParams::from_prior(&prior, SirenMode::DpApproximation);
    let mut group = c.benchmark_group("full_map");
    for side in [200usize, 400] {
        let dp = textured(GridGeometry::new(0.1, [0.0, 0.0], side, side).unwrap(), prior.beta);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("uncertainty_map/{name}"), side), &dp, |b, dp| {
                b.iter(|| build_uncertainty_map(black_box(dp), &prior, exec))
            });
            group.bench_with_input(BenchmarkId::new(format!("siren/{name}"), side), &dp, |b, dp| {
                b.iter(|| siren(black_box(dp), &prior, &params, exec).unwrap().total)
            });
        }
    }
    group.finish();
}

fn scan_update(c: &mut Criterion) {
    let prior = derive_prior(&PriorSpec::planar(1.0, 0.1, 0.5).unwrap()).unwrap();
    let g = GridGeometry::new(0.1, [0.0, 0.0], 120, 120).unwrap();
    let pose = GaussianBelief::from_diagonal(&[6.0, 6.0, 0.2], &[0.05, 0.03, 1e-4]).unwrap();
    let scan: Vec<Beam> = (0..720)
        .map(|k| Beam { measurement: PolarMeasurement::new(4.5, (k as f64 * 0.5).to_radians()).unwrap(), hit: k % 2 == 0 })
        .collect();
    let fov = FovModel::default();
    let mut group = c.benchmark_group("apply_fov");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut dp = unknown_grid(g, &prior);
                let mut occ = OccupancyGrid::new(g);
                apply_fov(&mut dp, &mut occ, &pose, black_box(&scan), &fov, &prior, exec).unwrap().touched.len()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, full_map, scan_update);
criterion_main!(benches);
