//! Per-situation metrics and the aggregate trend report: probabilities,
//! expectations, the dynamic histogram and the reversed joint CDF.
//!
//! Risk and goal of a 1-2-3 or 3-2-3 situation are measured from the close
//! at the identification bar of its P3 and are signed by trend direction, so
//! they read the same way for up and down trends. A 2-3-2 situation measures
//! the movement `|P2_new − P3|` against the preceding correction `|P2 − P3|`.
//! Censored and degenerate records never enter probabilities or means.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{atr, IndicatorSeries};
use crate::market_data::{format_timestamp, CandleSeries};
use crate::par::{self, Execution};
use crate::sar_minmax::{ExtremumEvent, PreparedSeries, SarConfig};
use crate::trend_engine::{count_movements, run_trend_indicator, SituationKind, SituationRecord, Trend, TrendRun};

/// Metrics of a 1-2-3 or 3-2-3 situation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMetrics {
    pub r_atr: f64,
    pub g_atr: f64,
    pub r_pct: f64,
    pub g_pct: f64,
    /// Correction height over the preceding movement height.
    pub corr_over_move: f64,
}

/// Metrics of a 2-3-2 situation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicMetrics {
    pub dynamic: f64,
    pub lagged_dynamic: f64,
    pub rel_dur_dynamic: f64,
    pub rel_dur_lagged: f64,
    pub rel_dur_break: f64,
    pub move_height_atr: f64,
    pub corr_height_atr: f64,
    pub move_height_rel: f64,
    pub corr_height_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SituationMetrics {
    Risk(RiskMetrics),
    Dynamic(DynamicMetrics),
}

fn atr_at(atr: &IndicatorSeries, t: usize) -> Result<f64> {
    match atr.get(t) {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(_) => Err(Error::Degenerate("ATR is zero at P3")),
        None => Err(Error::Degenerate("ATR undefined at P3")),
    }
}

fn risk(s: f64, p3: f64, p2: f64, close: f64, atr: f64, corr_over_move: f64) -> Result<RiskMetrics> {
    let span = s * (p2 - p3);
    if span <= 0.0 {
        return Err(Error::Degenerate("P2 does not lie beyond P3"));
    }
    let r_pct = s * (close - p3) / span;
    Ok(RiskMetrics {
        r_atr: s * (close - p3) / atr,
        g_atr: s * (p2 - close) / atr,
        r_pct,
        g_pct: 1.0 - r_pct,
        corr_over_move,
    })
}

/// Risk and goal of a 1-2-3 situation.
pub fn metrics_123(record: &SituationRecord, atr: &IndicatorSeries) -> Result<RiskMetrics> {
    if record.kind != SituationKind::S123 {
        return Err(Error::InvalidParameter("expected a 1-2-3 record".into()));
    }
    let s = record.direction.sign();
    let p1 = record.p1.ok_or(Error::Degenerate("1-2-3 record without P1"))?;
    let (p2, p3) = (record.p2.price, record.p3.price);
    let initial = s * (p2 - p1.price);
    if initial <= 0.0 {
        return Err(Error::Degenerate("zero initial movement"));
    }
    let a = atr_at(atr, record.p3.at)?;
    risk(s, p3, p2, record.close_at_identification, a, s * (p2 - p3) / initial)
}

/// Risk and goal of a 3-2-3 situation, measured at the new P3.
pub fn metrics_323(record: &SituationRecord, atr: &IndicatorSeries) -> Result<RiskMetrics> {
    if record.kind != SituationKind::S323 {
        return Err(Error::InvalidParameter("expected a 3-2-3 record".into()));
    }
    let s = record.direction.sign();
    let p3_new = record.p3_new.ok_or(Error::Degenerate("3-2-3 record without P3_new"))?;
    let p2 = record.p2.price;
    let movement = s * (p2 - record.p3.price);
    if movement <= 0.0 {
        return Err(Error::Degenerate("zero movement"));
    }
    let a = atr_at(atr, p3_new.at)?;
    risk(
        s,
        p3_new.price,
        p2,
        record.close_at_identification,
        a,
        s * (p2 - p3_new.price) / movement,
    )
}

/// Dynamic, durations and heights of a 2-3-2 situation.
pub fn metrics_232(record: &SituationRecord, atr: &IndicatorSeries) -> Result<DynamicMetrics> {
    if record.kind != SituationKind::S232 {
        return Err(Error::InvalidParameter("expected a 2-3-2 record".into()));
    }
    let s = record.direction.sign();
    let p2_new = record.p2_new.ok_or(Error::Degenerate("2-3-2 record without P2_new"))?;
    let (p2, p3) = (record.p2, record.p3);
    if p3.at <= p2.at {
        return Err(Error::Degenerate("P3 does not follow P2"));
    }
    let corr = s * (p2.price - p3.price);
    let movement = s * (p2_new.price - p3.price);
    if corr <= 0.0 || movement <= corr {
        return Err(Error::Degenerate("points are not ordered P3 < P2 < P2_new"));
    }
    if p3.price == 0.0 {
        return Err(Error::Degenerate("P3 price is zero"));
    }
    let a = atr_at(atr, p3.at)?;
    let (t2, t3) = (p2.at as f64, p3.at as f64);
    let base = t3 - t2;
    let t_break = record.break_point.map_or(p2_new.at, |b| b.0) as f64;
    Ok(DynamicMetrics {
        dynamic: movement / corr,
        lagged_dynamic: (record.close_at_identification - p3.price).abs() / corr,
        rel_dur_dynamic: (p2_new.at as f64 - t3) / base,
        rel_dur_lagged: (p2_new.identified_at as f64 - t3) / base,
        rel_dur_break: (t_break - t3) / base,
        move_height_atr: movement / a,
        corr_height_atr: corr / a,
        move_height_rel: movement / p3.price.abs(),
        corr_height_rel: corr / p3.price.abs(),
    })
}

/// Metrics for any record kind.
pub fn situation_metrics(record: &SituationRecord, atr: &IndicatorSeries) -> Result<SituationMetrics> {
    match record.kind {
        SituationKind::S123 => metrics_123(record, atr).map(SituationMetrics::Risk),
        SituationKind::S323 => metrics_323(record, atr).map(SituationMetrics::Risk),
        SituationKind::S232 => metrics_232(record, atr).map(SituationMetrics::Dynamic),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub activate_123: Option<f64>,
    pub pass_323: Option<f64>,
    /// Share of resolved 2-3-2 situations whose P2 was passed.
    pub pass_232_empirical: Option<f64>,
    /// `1 − #trends / #2-3-2`
    pub pass_232_identity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Success rates over non-censored records; absent where nothing resolved.
pub fn probabilities(records: &[SituationRecord], trends: &[Trend]) -> Probabilities {
    let tally = |kind: SituationKind| {
        let resolved = records.iter().filter(|r| r.kind == kind && !r.is_censored());
        let (mut ok, mut total) = (0, 0);
        for r in resolved {
            total += 1;
            if r.outcome.is_success() {
                ok += 1;
            }
        }
        ratio(ok, total)
    };
    let n232 = records.iter().filter(|r| r.kind == SituationKind::S232).count();
    Probabilities {
        activate_123: tally(SituationKind::S123),
        pass_323: tally(SituationKind::S323),
        pass_232_empirical: tally(SituationKind::S232),
        // Written as (#2-3-2 − #trends)/#2-3-2 so that it is computed exactly
        // like the empirical share when both agree on the counts.
        pass_232_identity: ratio(n232.saturating_sub(trends.len()), n232),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// `None` is −∞.
    pub lower: Option<f64>,
    /// `None` is +∞.
    pub upper: Option<f64>,
    pub count: usize,
    pub frequency: f64,
}

/// Relative frequencies over `(−∞, 1)`, `[1, 1+w)`, `[1+w, 1+2w)`, …, and a
/// terminal `[cap, ∞)`. The last regular bin is cut at `cap`.
pub fn dynamic_histogram(values: &[f64], bin_width: f64, cap: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) || !(cap > 1.0 && cap.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "histogram needs bin width > 0 and cap > 1, got {bin_width} and {cap}"
        )));
    }
    let mut edges = vec![1.0];
    let mut k = 1usize;
    loop {
        let e = 1.0 + k as f64 * bin_width;
        if e >= cap - 1e-12 {
            break;
        }
        edges.push(e);
        k += 1;
    }
    edges.push(cap);
    let mut bins = Vec::with_capacity(edges.len() + 1);
    bins.push(HistogramBin {
        lower: None,
        upper: Some(1.0),
        count: 0,
        frequency: 0.0,
    });
    for w in edges.windows(2) {
        bins.push(HistogramBin {
            lower: Some(w[0]),
            upper: Some(w[1]),
            count: 0,
            frequency: 0.0,
        });
    }
    bins.push(HistogramBin {
        lower: Some(cap),
        upper: None,
        count: 0,
        frequency: 0.0,
    });
    let mut total = 0usize;
    for &v in values.iter().filter(|v| !v.is_nan()) {
        // edges are sorted; the bin is the number of edges ≤ v
        let i = edges.partition_point(|&e| e <= v);
        bins[i].count += 1;
        total += 1;
    }
    if total > 0 {
        for b in &mut bins {
            b.frequency = b.count as f64 / total as f64;
        }
    }
    Ok(bins)
}

/// `F̃(x, y)`: share of `(rel_dur, dynamic)` samples with `rel_dur ≥ x` and
/// `dynamic ≥ y`. Row `i`, column `j` holds `F̃(xs[i], ys[j])`.
pub fn reversed_cdf(samples: &[(f64, f64)], xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
    let sorted = |g: &[f64]| g.windows(2).all(|w| w[0] <= w[1]);
    if !sorted(xs) || !sorted(ys) {
        return Err(Error::InvalidParameter("reversed CDF grids must be sorted".into()));
    }
    let n = samples.len();
    Ok(xs
        .iter()
        .map(|&x| {
            ys.iter()
                .map(|&y| {
                    if n == 0 {
                        return 0.0;
                    }
                    let hits = samples.iter().filter(|(r, d)| *r >= x && *d >= y).count();
                    hits as f64 / n as f64
                })
                .collect()
        })
        .collect())
}

/// Evenly spaced grid `start, start + step, …` up to `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Vec::new();
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

/// Mean points of the three duration/dynamic pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorExpectations {
    /// `(E rel_dur_dynamic, E dynamic)`
    pub dynamic: (f64, f64),
    /// `(E rel_dur_break, 1)`
    pub breakout: (f64, f64),
    /// `(E rel_dur_lagged, E lagged_dynamic)`
    pub lagged: (f64, f64),
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn vector_expectations(samples: &[DynamicMetrics]) -> Option<VectorExpectations> {
    let m = |f: fn(&DynamicMetrics) -> f64| mean(samples.iter().map(f));
    Some(VectorExpectations {
        dynamic: (m(|s| s.rel_dur_dynamic)?, m(|s| s.dynamic)?),
        breakout: (m(|s| s.rel_dur_break)?, 1.0),
        lagged: (m(|s| s.rel_dur_lagged)?, m(|s| s.lagged_dynamic)?),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub candles: usize,
    pub trends: usize,
    pub broken_trends: usize,
    pub s123: usize,
    pub s323: usize,
    pub s232: usize,
}

/// Records left out of the means, per kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Exclusions {
    pub censored_123: usize,
    pub censored_323: usize,
    pub censored_232: usize,
    pub degenerate_123: usize,
    pub degenerate_323: usize,
    pub degenerate_232: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskExpectations {
    pub r_atr: Option<f64>,
    pub g_atr: Option<f64>,
    pub r_pct: Option<f64>,
    pub g_pct: Option<f64>,
    pub corr_over_move: Option<f64>,
}

impl RiskExpectations {
    fn of(m: &[RiskMetrics]) -> Self {
        Self {
            r_atr: mean(m.iter().map(|x| x.r_atr)),
            g_atr: mean(m.iter().map(|x| x.g_atr)),
            r_pct: mean(m.iter().map(|x| x.r_pct)),
            g_pct: mean(m.iter().map(|x| x.g_pct)),
            corr_over_move: mean(m.iter().map(|x| x.corr_over_move)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicExpectations {
    pub dynamic: Option<f64>,
    pub lagged_dynamic: Option<f64>,
    pub rel_dur_dynamic: Option<f64>,
    pub rel_dur_lagged: Option<f64>,
    pub rel_dur_break: Option<f64>,
    pub move_height_atr: Option<f64>,
    pub corr_height_atr: Option<f64>,
    pub move_height_rel: Option<f64>,
    pub corr_height_rel: Option<f64>,
    /// Mean of `corr_height / move_height` per record.
    pub corr_over_move: Option<f64>,
}

impl DynamicExpectations {
    fn of(m: &[DynamicMetrics]) -> Self {
        Self {
            dynamic: mean(m.iter().map(|x| x.dynamic)),
            lagged_dynamic: mean(m.iter().map(|x| x.lagged_dynamic)),
            rel_dur_dynamic: mean(m.iter().map(|x| x.rel_dur_dynamic)),
            rel_dur_lagged: mean(m.iter().map(|x| x.rel_dur_lagged)),
            rel_dur_break: mean(m.iter().map(|x| x.rel_dur_break)),
            move_height_atr: mean(m.iter().map(|x| x.move_height_atr)),
            corr_height_atr: mean(m.iter().map(|x| x.corr_height_atr)),
            move_height_rel: mean(m.iter().map(|x| x.move_height_rel)),
            corr_height_rel: mean(m.iter().map(|x| x.corr_height_rel)),
            corr_over_move: mean(m.iter().map(|x| x.corr_height_atr / x.move_height_atr)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub symbol: String,
    pub aggregation: String,
    /// Evaluation period, first and last candle.
    pub period_start: Option<String>,
    pub period_end: Option<String>,
    pub timescale: Option<f64>,
    pub counts: Counts,
    pub excluded: Exclusions,
    pub probabilities: Probabilities,
    pub expected_movements: Option<f64>,
    pub s123: RiskExpectations,
    pub s323: RiskExpectations,
    pub s232: DynamicExpectations,
    pub vector_expectations: Option<VectorExpectations>,
}

/// Metrics of the usable records, split by kind, in record order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSet {
    pub s123: Vec<RiskMetrics>,
    pub s323: Vec<RiskMetrics>,
    pub s232: Vec<DynamicMetrics>,
    pub excluded: Exclusions,
}

/// Computes metrics for every non-censored record. Records are evaluated in
/// parallel and folded in their original order.
pub fn collect_metrics(records: &[SituationRecord], atr: &IndicatorSeries, exec: Execution) -> MetricSet {
    let computed = par::map(records, exec, |r| (!r.is_censored()).then(|| situation_metrics(r, atr)));
    let mut set = MetricSet::default();
    let ex = &mut set.excluded;
    for (r, m) in records.iter().zip(computed) {
        match (r.kind, m) {
            (SituationKind::S123, None) => ex.censored_123 += 1,
            (SituationKind::S323, None) => ex.censored_323 += 1,
            (SituationKind::S232, None) => ex.censored_232 += 1,
            (SituationKind::S123, Some(Err(_))) => ex.degenerate_123 += 1,
            (SituationKind::S323, Some(Err(_))) => ex.degenerate_323 += 1,
            (SituationKind::S232, Some(Err(_))) => ex.degenerate_232 += 1,
            (SituationKind::S123, Some(Ok(SituationMetrics::Risk(m)))) => set.s123.push(m),
            (SituationKind::S323, Some(Ok(SituationMetrics::Risk(m)))) => set.s323.push(m),
            (SituationKind::S232, Some(Ok(SituationMetrics::Dynamic(m)))) => set.s232.push(m),
            _ => unreachable!("metric type follows record kind"),
        }
    }
    set
}

/// Assembles counts, probabilities and expectations for one run.
pub fn build_report(
    series: &CandleSeries,
    trends: &[Trend],
    records: &[SituationRecord],
    atr: &IndicatorSeries,
    exec: Execution,
) -> Result<StatsReport> {
    report_from_metrics(series, trends, records, &collect_metrics(records, atr, exec))
}

fn report_from_metrics(
    series: &CandleSeries,
    trends: &[Trend],
    records: &[SituationRecord],
    metrics: &MetricSet,
) -> Result<StatsReport> {
    let count = |k| records.iter().filter(|r| r.kind == k).count();
    let movements = trends.iter().map(count_movements).collect::<Result<Vec<_>>>()?;
    let (period_start, period_end) = if series.is_empty() {
        (None, None)
    } else {
        let (a, b) = series.period();
        (Some(format_timestamp(a)), Some(format_timestamp(b)))
    };
    Ok(StatsReport {
        symbol: series.symbol.clone(),
        aggregation: series.aggregation.clone(),
        period_start,
        period_end,
        timescale: None,
        counts: Counts {
            candles: series.len(),
            trends: trends.len(),
            broken_trends: trends.iter().filter(|t| t.is_broken()).count(),
            s123: count(SituationKind::S123),
            s323: count(SituationKind::S323),
            s232: count(SituationKind::S232),
        },
        excluded: metrics.excluded,
        probabilities: probabilities(records, trends),
        expected_movements: mean(movements.iter().map(|&m| m as f64)),
        s123: RiskExpectations::of(&metrics.s123),
        s323: RiskExpectations::of(&metrics.s323),
        s232: DynamicExpectations::of(&metrics.s232),
        vector_expectations: vector_expectations(&metrics.s232),
    })
}

/// Extrema, trends, situations and report of one series at one timescale.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub extrema: Vec<ExtremumEvent>,
    pub run: TrendRun,
    pub metrics: MetricSet,
    pub report: StatsReport,
}

/// Runs the extrema process, the trend indicator and the statistics.
pub fn run_study(series: &CandleSeries, config: &SarConfig, exec: Execution) -> Result<Study> {
    config.validate()?;
    let prepared = PreparedSeries::new(series, config.atr_period)?;
    let extrema = prepared.extrema(config)?;
    let run = run_trend_indicator(&extrema, series)?;
    let atr = atr(series, config.atr_period)?;
    let metrics = collect_metrics(&run.situations, &atr, exec);
    let mut report = report_from_metrics(series, &run.trends, &run.situations, &metrics)?;
    report.timescale = Some(config.timescale);
    Ok(Study {
        extrema,
        run,
        metrics,
        report,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl StatsReport {
    /// Aligned two-column table, one row per quantity.
    pub fn to_table(&self) -> String {
        let c = &self.counts;
        let p = &self.probabilities;
        let mut rows: Vec<(String, String)> = vec![
            ("symbol".into(), self.symbol.clone()),
            ("aggregation".into(), self.aggregation.clone()),
            ("period start".into(), self.period_start.clone().unwrap_or_default()),
            ("period end".into(), self.period_end.clone().unwrap_or_default()),
            ("timescale".into(), fmt_opt(self.timescale)),
            ("#candles".into(), c.candles.to_string()),
            ("#trends".into(), c.trends.to_string()),
            ("#broken trends".into(), c.broken_trends.to_string()),
            ("#1-2-3".into(), c.s123.to_string()),
            ("#3-2-3".into(), c.s323.to_string()),
            ("#2-3-2".into(), c.s232.to_string()),
            ("P(activate | 1-2-3)".into(), fmt_opt(p.activate_123)),
            ("P(pass P2 | 3-2-3)".into(), fmt_opt(p.pass_323)),
            ("P(pass P2 | 2-3-2)".into(), fmt_opt(p.pass_232_empirical)),
            ("1 - #trends/#2-3-2".into(), fmt_opt(p.pass_232_identity)),
            ("E(movements)".into(), fmt_opt(self.expected_movements)),
        ];
        for (name, r) in [("1-2-3", &self.s123), ("3-2-3", &self.s323)] {
            rows.push((format!("{name} E(R_ATR)"), fmt_opt(r.r_atr)));
            rows.push((format!("{name} E(G_ATR)"), fmt_opt(r.g_atr)));
            rows.push((format!("{name} E(R_%)"), fmt_opt(r.r_pct)));
            rows.push((format!("{name} E(G_%)"), fmt_opt(r.g_pct)));
            rows.push((format!("{name} E(corr/move)"), fmt_opt(r.corr_over_move)));
        }
        let d = &self.s232;
        for (name, v) in [
            ("E(dynamic)", d.dynamic),
            ("E(rel. duration dynamic)", d.rel_dur_dynamic),
            ("E(lagged dynamic)", d.lagged_dynamic),
            ("E(rel. duration lagged)", d.rel_dur_lagged),
            ("E(rel. duration break)", d.rel_dur_break),
            ("E(move height / ATR)", d.move_height_atr),
            ("E(corr height / ATR)", d.corr_height_atr),
            ("E(move height / P3)", d.move_height_rel),
            ("E(corr height / P3)", d.corr_height_rel),
            ("E(corr/move)", d.corr_over_move),
        ] {
            rows.push((format!("2-3-2 {name}"), fmt_opt(v)));
        }
        let e = &self.excluded;
        rows.push((
            "censored 123/323/232".into(),
            format!("{}/{}/{}", e.censored_123, e.censored_323, e.censored_232),
        ));
        rows.push((
            "degenerate 123/323/232".into(),
            format!("{}/{}/{}", e.degenerate_123, e.degenerate_323, e.degenerate_232),
        ));
        let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

/// Writes `lower,upper,count,frequency`; infinite bounds are written as
/// `-inf` and `inf`.
pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lower", "upper", "count", "frequency"])?;
    for b in bins {
        w.write_record([
            b.lower.map_or("-inf".to_string(), |v| v.to_string()),
            b.upper.map_or("inf".to_string(), |v| v.to_string()),
            b.count.to_string(),
            b.frequency.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Writes the grid in long form: `x,y,value`.
pub fn write_reversed_cdf_csv<W: Write>(xs: &[f64], ys: &[f64], values: &[Vec<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "value"])?;
    for (x, row) in xs.iter().zip(values) {
        for (y, v) in ys.iter().zip(row) {
            w.write_record([x.to_string(), y.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sar_minmax::Direction;
    use crate::trend_engine::{Outcome, PricePoint};

    fn pt(at: usize, price: f64, identified_at: usize) -> PricePoint {
        PricePoint {
            at,
            price,
            identified_at,
        }
    }

    fn flat_atr(v: f64) -> IndicatorSeries {
        IndicatorSeries::new(vec![v; 100], 0)
    }

    fn record(kind: SituationKind) -> SituationRecord {
        SituationRecord {
            kind,
            direction: Direction::Up,
            p1: Some(pt(0, 95.0, 1)),
            p2: pt(2, 110.0, 3),
            p3: pt(4, 100.0, 5),
            p3_new: None,
            p2_new: None,
            close_at_identification: 104.0,
            decision_bar: 5,
            outcome: Outcome::Failed,
            resolved_at: Some(6),
            break_point: None,
        }
    }

    #[test]
    fn risk_example() {
        let m = metrics_123(&record(SituationKind::S123), &flat_atr(2.0)).unwrap();
        assert_eq!((m.r_atr, m.g_atr), (2.0, 3.0));
        assert!((m.r_pct - 0.4).abs() < 1e-15 && (m.g_pct - 0.6).abs() < 1e-15);
        let mut r = record(SituationKind::S123);
        r.close_at_identification = 100.0;
        let m = metrics_123(&r, &flat_atr(2.0)).unwrap();
        assert_eq!((m.r_atr, m.g_pct), (0.0, 1.0));
    }

    #[test]
    fn down_risk_is_mirrored() {
        let mut r = record(SituationKind::S123);
        r.direction = Direction::Down;
        r.p1 = Some(pt(0, 105.0, 1));
        r.p2 = pt(2, 90.0, 3);
        r.p3 = pt(4, 100.0, 5);
        r.close_at_identification = 96.0;
        let m = metrics_123(&r, &flat_atr(2.0)).unwrap();
        assert_eq!((m.r_atr, m.g_atr), (2.0, 3.0));
        assert!((m.r_pct - 0.4).abs() < 1e-15);
    }

    #[test]
    fn half_retracement() {
        let mut r = record(SituationKind::S323);
        r.p3 = pt(0, 100.0, 1);
        r.p2 = pt(2, 110.0, 3);
        r.p3_new = Some(pt(4, 105.0, 5));
        r.close_at_identification = 106.0;
        assert_eq!(metrics_323(&r, &flat_atr(1.0)).unwrap().corr_over_move, 0.5);
    }

    #[test]
    fn dynamic_example() {
        let mut r = record(SituationKind::S232);
        r.p2 = pt(0, 110.0, 1);
        r.p3 = pt(4, 100.0, 5);
        r.p2_new = Some(pt(14, 125.0, 16));
        r.close_at_identification = 120.0;
        r.break_point = Some((7, 111.0));
        let m = metrics_232(&r, &flat_atr(2.0)).unwrap();
        assert_eq!((m.dynamic, m.rel_dur_dynamic), (2.5, 2.5));
        assert_eq!((m.lagged_dynamic, m.rel_dur_lagged, m.rel_dur_break), (2.0, 3.0, 0.75));
        assert_eq!((m.move_height_atr, m.corr_height_atr), (12.5, 5.0));
        assert_eq!((m.move_height_rel, m.corr_height_rel), (0.25, 0.1));
    }

    #[test]
    fn degenerate_records() {
        let mut r = record(SituationKind::S123);
        r.p2.price = 100.0;
        assert!(matches!(metrics_123(&r, &flat_atr(1.0)), Err(Error::Degenerate(_))));
        assert!(metrics_123(&record(SituationKind::S123), &flat_atr(0.0)).is_err());
        let mut r = record(SituationKind::S232);
        r.p2_new = Some(pt(8, 125.0, 9));
        r.p3 = pt(1, 100.0, 2);
        assert!(metrics_232(&r, &flat_atr(1.0)).is_err());
    }

    #[test]
    fn probability_examples() {
        let mut a = record(SituationKind::S123);
        a.outcome = Outcome::TrendActivated;
        let mut c = record(SituationKind::S123);
        c.outcome = Outcome::Censored;
        let p = probabilities(&[a.clone(), a, c], &[]);
        assert_eq!(p.activate_123, Some(1.0));
        assert_eq!(p.pass_323, None);
        assert_eq!(p.pass_232_identity, None);
    }

    #[test]
    fn histogram_examples() {
        let h = dynamic_histogram(&[1.5; 4], 0.5, 4.0).unwrap();
        let hit: Vec<_> = h.iter().filter(|b| b.count > 0).collect();
        assert_eq!(hit.len(), 1);
        assert_eq!((hit[0].lower, hit[0].frequency), (Some(1.5), 1.0));
        let h = dynamic_histogram(&[0.5, 1.0, 3.99, 4.0, 9.0], 0.25, 4.0).unwrap();
        assert_eq!(h.len(), 14);
        assert_eq!(h[0].count, 1);
        assert_eq!(h[1].count, 1);
        assert_eq!(h[12].count, 1);
        assert_eq!(h[13].count, 2);
        assert!(dynamic_histogram(&[1.0], 0.0, 4.0).is_err());
    }

    #[test]
    fn reversed_cdf_examples() {
        let g = reversed_cdf(&[(2.0, 3.0)], &[0.0, 2.0, 2.1], &[1.0, 3.0]).unwrap();
        assert_eq!(g, vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert!(reversed_cdf(&[], &[1.0, 0.0], &[1.0]).is_err());
    }

    #[test]
    fn vector_expectation_midpoint() {
        let a = DynamicMetrics {
            dynamic: 2.0,
            lagged_dynamic: 1.0,
            rel_dur_dynamic: 1.0,
            rel_dur_lagged: 2.0,
            rel_dur_break: 0.5,
            move_height_atr: 0.0,
            corr_height_atr: 0.0,
            move_height_rel: 0.0,
            corr_height_rel: 0.0,
        };
        let b = DynamicMetrics {
            dynamic: 4.0,
            lagged_dynamic: 3.0,
            rel_dur_dynamic: 3.0,
            rel_dur_lagged: 4.0,
            rel_dur_break: 1.5,
            ..a
        };
        assert_eq!(vector_expectations(&[a]).unwrap().dynamic, (1.0, 2.0));
        let v = vector_expectations(&[a, b]).unwrap();
        assert_eq!((v.dynamic, v.breakout, v.lagged), ((2.0, 3.0), (1.0, 1.0), (3.0, 2.0)));
        assert!(vector_expectations(&[]).is_none());
    }

    #[test]
    fn empty_report() {
        let s = CandleSeries::new(
            "X",
            "1d",
            vec![crate::market_data::Candle::new(0, 0, 1.0, 1.0, 1.0, 1.0)],
        )
        .unwrap();
        let r = build_report(&s, &[], &[], &flat_atr(1.0), Execution::Sequential).unwrap();
        assert_eq!(r.counts.trends, 0);
        assert_eq!(r.probabilities, Probabilities::default());
        assert!(r.to_table().contains("#trends"));
    }
}
