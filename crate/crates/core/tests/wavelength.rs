mod oracles;

use oracles::{brute_phi, random_series};
use proptest::prelude::*;
use trendwave::calibration::{calibrate, TimescaleGrid};
use trendwave::synth::{self, SineSpec, SplitMix64, SynthSpec};
use trendwave::wavelength::{
    correlogram, correlogram_with, cross_correlation, max_admissible_shift, WavelengthOptions,
};
use trendwave::{mid_price_series, Execution, SarConfig, Warning};

#[test]
fn matches_brute_force_on_random_series() {
    let mut rng = SplitMix64::new(2024);
    for _ in 0..100 {
        let len = rng.int(300, 2000);
        let a = random_series(&mut rng, len, 100.0);
        for n in 2..=100 {
            let got = cross_correlation(&a, n).unwrap();
            let want = brute_phi(&a, n).unwrap();
            assert!((got - want).abs() <= 1e-12, "len {len} n {n}: {got} vs {want}");
        }
    }
}

#[test]
fn bounded_on_every_admissible_shift() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..100 {
        let len = rng.int(20, 600);
        let a = random_series(&mut rng, len, 0.0);
        for n in 2..=max_admissible_shift(len).unwrap() {
            let phi = cross_correlation(&a, n).unwrap();
            assert!(phi.abs() <= 1.0 + 1e-12, "n {n}: {phi}");
        }
    }
}

#[test]
fn white_noise_has_only_the_detrending_artefact() {
    // Detrending i.i.d. noise with a 3-bar window leaves a lag-2 correlation
    // of 1/6; every longer shift is near zero.
    let mut rng = SplitMix64::new(99);
    let a: Vec<f64> = (0..20_000).map(|_| rng.normal()).collect();
    let c = correlogram(&a, 2, 300).unwrap();
    assert!((c.phi_at(2).unwrap() - 1.0 / 6.0).abs() < 0.02);
    for (&n, &phi) in c.shifts.iter().zip(&c.phi).skip(1) {
        assert!(phi.abs() < 0.1, "n {n}: {phi}");
    }
}

#[test]
fn noiseless_sine_recovers_its_period() {
    let series = synth::generate(&SynthSpec::Sine(SineSpec::default())).unwrap();
    let c = correlogram(&mid_price_series(&series), 2, 300).unwrap();
    assert_eq!(c.best.0, 50);
    assert!(c.best.1 > 0.999);
}

#[test]
fn parallel_and_sequential_correlograms_agree() {
    let mut rng = SplitMix64::new(3);
    let a = random_series(&mut rng, 3000, 50.0);
    let opts = |execution| WavelengthOptions {
        execution,
        ..WavelengthOptions::default()
    };
    let s = correlogram_with(&a, &opts(Execution::Sequential)).unwrap();
    let p = correlogram_with(&a, &opts(Execution::Parallel)).unwrap();
    assert_eq!(s, p);
}

#[test]
fn anticorrelated_shift_is_reported_as_weak() {
    // A bar-to-bar zigzag on top of a slow sine: the 3-bar detrending keeps
    // only the zigzag, which an odd shift sees out of phase.
    let spec = SineSpec {
        length: 2000,
        period: 100.0,
        amplitude: 50.0,
        ..SineSpec::default()
    };
    let base = synth::generate(&SynthSpec::Sine(spec)).unwrap();
    let candles = base
        .candles()
        .iter()
        .map(|c| {
            let z = if c.index % 2 == 0 { 1.0 } else { -1.0 };
            trendwave::Candle::new(c.index, c.timestamp, c.close + z, c.high + z, c.low + z, c.close + z)
        })
        .collect();
    let series = trendwave::CandleSeries::new("ZIGZAG", "1d", candles).unwrap();
    let opts = WavelengthOptions {
        n_min: 3,
        n_max: 3,
        ..WavelengthOptions::default()
    };
    let cal = calibrate(
        &series,
        &opts,
        &TimescaleGrid::default(),
        &SarConfig::default(),
        Execution::Sequential,
    )
    .unwrap();
    assert!(cal.phi_star < -0.5);
    assert!(cal
        .warnings
        .iter()
        .any(|w| matches!(w, Warning::WeakCorrelation { .. })));
}

#[test]
fn oversized_range_is_truncated_with_a_warning() {
    let mut rng = SplitMix64::new(4);
    let a = random_series(&mut rng, 200, 10.0);
    let c = correlogram(&a, 2, 300).unwrap();
    let limit = max_admissible_shift(200).unwrap();
    assert_eq!(*c.shifts.last().unwrap(), limit);
    assert!(matches!(c.warnings[0], Warning::ShiftRangeTruncated { used_max, .. } if used_max == limit));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_and_shift_invariant(seed in any::<u64>(), len in 60usize..400, scale in 0.01f64..100.0, offset in -1e3f64..1e3) {
        let mut rng = SplitMix64::new(seed);
        let a = random_series(&mut rng, len, 0.0);
        let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();
        let shifted: Vec<f64> = a.iter().map(|v| v + offset).collect();
        for n in 2..=max_admissible_shift(len).unwrap().min(40) {
            let base = cross_correlation(&a, n).unwrap();
            prop_assert!((cross_correlation(&scaled, n).unwrap() - base).abs() <= 1e-9);
            prop_assert!((cross_correlation(&shifted, n).unwrap() - base).abs() <= 1e-9);
        }
    }

    #[test]
    fn cauchy_schwarz(seed in any::<u64>(), len in 20usize..300) {
        let mut rng = SplitMix64::new(seed);
        let a: Vec<f64> = (0..len).map(|_| rng.range(-1.0, 1.0)).collect();
        for n in 2..=max_admissible_shift(len).unwrap() {
            prop_assert!(cross_correlation(&a, n).unwrap().abs() <= 1.0 + 1e-12);
        }
    }
}
