use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noisy_cycles::analysis::{averaged_periodogram, Window};
use noisy_cycles::hopf::{on_cycle_start, HopfParams};
use noisy_cycles::parallel::Parallelism;
use noisy_cycles::sde::{integrate_ensemble, IntegratorConfig};

const MODES: [(&str, Parallelism); 2] = [
    ("parallel", Parallelism::Parallel),
    ("sequential", Parallelism::Sequential),
];

fn ensemble(c: &mut Criterion) {
    let p = HopfParams::with_nsr(2.0 * PI, 2.0 * PI, 2.0 * PI, 1.0, 0.1).unwrap();
    let system = p.system();
    // 10 periods at 1e-3 periods per step, sampled every 10 steps.
    let cfg = IntegratorConfig::new(1e-3, 1000, on_cycle_start(&p))
        .with_substeps(10)
        .with_seed(7);
    let mut group = c.benchmark_group("hopf_ensemble_32_paths");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| integrate_ensemble(&system, &cfg, 32, mode).unwrap())
        });
    }
    group.finish();

    let paths: Vec<Vec<f64>> = integrate_ensemble(&system, &cfg, 32, Parallelism::Parallel)
        .unwrap()
        .iter()
        .map(|t| t.column(0))
        .collect();
    let mut group = c.benchmark_group("periodogram_32_paths");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| averaged_periodogram(&paths, 1e-2, Window::Rectangular, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
