use std::hint::black_box;

use anomscale_core::estimators::{PathStatistics, StatisticKind};
use anomscale_core::fitting::{fit_model, FtcModel, SolverSettings};
use anomscale_core::generators::{fgn, stable_noise};
use anomscale_core::{generate, make_time_grid, ProcessSpec, RngStream};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn generators(c: &mut Criterion) {
    let mut g = c.benchmark_group("noise");
    for n in [1 << 12, 1 << 16] {
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("fgn", n), &n, |b, &n| {
            let mut s = RngStream::new(1, 0);
            b.iter(|| fgn(black_box(0.7), n, &mut s).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("stable", n), &n, |b, &n| {
            let mut s = RngStream::new(1, 0);
            b.iter(|| stable_noise(black_box(0.6), n, &mut s).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    for (name, spec) in [
        ("sbm_0.7", ProcessSpec::Sbm { moses: 0.7 }),
        ("fbm_0.7", ProcessSpec::Fbm { joseph: 0.7 }),
        ("flm_0.6_0.6", ProcessSpec::flm(0.6, 0.6, 2048)),
        ("vdp_0.3", ProcessSpec::vdp(0.3)),
    ] {
        g.bench_function(name, |b| b.iter(|| generate(&spec, 200, 2048, 1).unwrap()));
    }
    g.finish();
}

fn statistics(c: &mut Criterion) {
    let e = generate(&ProcessSpec::Bm, 1000, 4096, 1).unwrap();
    let grid = make_time_grid(20, 4096, 100).unwrap();
    let mut g = c.benchmark_group("statistics");
    g.sample_size(10);
    g.throughput(Throughput::Elements((e.n_paths() * e.n_steps()) as u64));
    g.bench_function("path_statistics_1000x4096", |b| {
        b.iter(|| PathStatistics::compute(black_box(&e), &grid).unwrap())
    });
    let stats = PathStatistics::compute(&e, &grid).unwrap();
    g.bench_function("series_all_kinds", |b| {
        b.iter(|| {
            for k in [StatisticKind::RsMean, StatisticKind::MedianZ, StatisticKind::MedianY, StatisticKind::WidthIqr] {
                black_box(stats.series(k).unwrap());
            }
        })
    });
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let grid = make_time_grid(50, 1_000_000, 500).unwrap();
    let t = grid.points();
    let y: Vec<f64> = t
        .iter()
        .map(|&t| 2.0 * (t as f64).powf(0.6) - 3.0 * (t as f64).powf(0.1))
        .collect();
    let w = vec![1.0; t.len()];
    let settings = SolverSettings::default();
    c.bench_function("fit_free_500", |b| {
        b.iter(|| fit_model(t, black_box(&y), &w, FtcModel::Free, &settings).unwrap())
    });
    c.bench_function("fit_known_500", |b| {
        b.iter(|| fit_model(t, black_box(&y), &w, FtcModel::Known { omega: 0.6 }, &settings).unwrap())
    });
}

criterion_group!(benches, generators, statistics, fitting);
criterion_main!(benches);
