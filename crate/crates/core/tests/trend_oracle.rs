mod oracles;

use oracles::{brute_trends, OracleCounts, OracleTrend};
use trendwave::sar_minmax::{Direction, ExtremumEvent, PreparedSeries, SarConfig};
use trendwave::synth::{self, RandomWalkSpec, StaircaseSpec, SynthSpec};
use trendwave::trend_engine::{count_movements, run_trend_indicator, SituationKind, TrendRun};
use trendwave::CandleSeries;

fn engine_counts(run: &TrendRun, dir: Direction) -> OracleCounts {
    let count = |kind| {
        run.situations
            .iter()
            .filter(|r| r.kind == kind && r.direction == dir)
            .count()
    };
    OracleCounts {
        trends: run
            .trends
            .iter()
            .filter(|t| t.direction == dir)
            .map(|t| OracleTrend {
                activated_at: t.activated_at.unwrap(),
                broken_at: t.broken_at,
                movements: count_movements(t).unwrap(),
            })
            .collect(),
        s123: count(SituationKind::S123),
        s323: count(SituationKind::S323),
        s232: count(SituationKind::S232),
    }
}

fn compare(extrema: &[ExtremumEvent], series: &CandleSeries, label: &str) -> usize {
    let run = run_trend_indicator(extrema, series).unwrap();
    let (up, down) = brute_trends(extrema, &series.highs(), &series.lows());
    assert_eq!(engine_counts(&run, Direction::Up), up, "{label}: up");
    assert_eq!(engine_counts(&run, Direction::Down), down, "{label}: down");
    run.trends.len()
}

#[test]
fn random_staircases_match_enumerator() {
    let mut trends = 0;
    for seed in 0..1000u64 {
        let count = 3 + (seed as usize * 7919) % 28;
        let spec = StaircaseSpec::random(seed, count);
        let series = synth::generate(&SynthSpec::TrendStaircase(spec.clone())).unwrap();
        let extrema = synth::staircase_extrema(&spec).unwrap();
        trends += compare(&extrema, &series, &format!("seed {seed}"));
    }
    // The fixtures must actually exercise the engine.
    assert!(trends > 500, "only {trends} trends");
}

#[test]
fn random_walk_extrema_match_enumerator() {
    for seed in 1..=5u64 {
        let series = synth::generate(&SynthSpec::RandomWalk(RandomWalkSpec {
            length: 3000,
            seed,
            ..RandomWalkSpec::default()
        }))
        .unwrap();
        let prepared = PreparedSeries::new(&series, 100).unwrap();
        for t in [0.5, 1.0, 2.4] {
            let extrema = prepared.extrema(&SarConfig::default().with_timescale(t)).unwrap();
            compare(&extrema, &series, &format!("walk {seed} t={t}"));
        }
    }
}
