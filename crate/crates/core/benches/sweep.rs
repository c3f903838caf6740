use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trendwave::calibration::{period_length_curve, TimescaleGrid};
use trendwave::synth::{self, RandomWalkSpec, SynthSpec};
use trendwave::wavelength::{correlogram_with, WavelengthOptions};
use trendwave::{mid_price_series, run_study, CandleSeries, Execution, SarConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn walk(length: usize) -> CandleSeries {
    synth::generate(&SynthSpec::RandomWalk(RandomWalkSpec {
        length,
        ..RandomWalkSpec::default()
    }))
    .unwrap()
}

fn correlogram(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlogram");
    group.sample_size(10);
    for len in [5_000, 20_000] {
        let mid = mid_price_series(&walk(len));
        for (name, execution) in MODES {
            let opts = WavelengthOptions {
                execution,
                ..WavelengthOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(name, len), &mid, |b, mid| {
                b.iter(|| correlogram_with(black_box(mid), &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn timescale_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("timescale_sweep");
    group.sample_size(10);
    let grid = TimescaleGrid::default().points().unwrap();
    for len in [5_000, 20_000] {
        let series = walk(len);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, len), &series, |b, s| {
                b.iter(|| period_length_curve(black_box(s), &grid, &SarConfig::default(), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn study(c: &mut Criterion) {
    let mut group = c.benchmark_group("study");
    group.sample_size(10);
    let series = walk(100_000);
    let config = SarConfig::default().with_timescale(1.0);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 100_000), &series, |b, s| {
            b.iter(|| run_study(black_box(s), &config, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, correlogram, timescale_sweep, study);
criterion_main!(benches);
