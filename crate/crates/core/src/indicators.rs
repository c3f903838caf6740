//! Indicator kernels: EMA, MACD, true range, ATR and the centered moving
//! average used for detrending.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

/// Indicator values aligned to bar index.
///
/// `values[i]` belongs to bar `valid_from + i`. Bars outside
/// `valid_from..valid_from + values.len()` have no defined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub values: Vec<f64>,
    pub valid_from: usize,
}

impl IndicatorSeries {
    pub fn new(values: Vec<f64>, valid_from: usize) -> Self {
        Self { values, valid_from }
    }

    /// Value at bar `t`, if defined.
    pub fn get(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.valid_from).and_then(|i| self.values.get(i)).copied()
    }

    /// One past the last defined bar.
    pub fn end(&self) -> usize {
        self.valid_from + self.values.len()
    }
}

/// Neumaier-compensated accumulator; keeps sliding window sums accurate over
/// long series.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exponential moving average with α = 2/(period+1), seeded with `x[0]`.
pub fn ema(x: &[f64], period: usize) -> Result<IndicatorSeries> {
    if period == 0 {
        return Err(Error::InvalidParameter("ema period must be >= 1".into()));
    }
    if x.is_empty() {
        return Err(Error::EmptySeries);
    }
    let alpha = 2.0 / (period as f64 + 1.0);
    let mut out = Vec::with_capacity(x.len());
    let mut e = x[0];
    out.push(e);
    for &v in &x[1..] {
        e = alpha * v + (1.0 - alpha) * e;
        out.push(e);
    }
    Ok(IndicatorSeries::new(out, 0))
}

/// MACD line (fast EMA minus slow EMA) and its signal line.
pub fn macd(a: &[f64], fast: usize, slow: usize, signal_period: usize) -> Result<(IndicatorSeries, IndicatorSeries)> {
    if fast == 0 || signal_period == 0 {
        return Err(Error::InvalidParameter("macd periods must be >= 1".into()));
    }
    if fast >= slow {
        return Err(Error::InvalidParameter(format!(
            "macd fast period {fast} must be below slow period {slow}"
        )));
    }
    let f = ema(a, fast)?;
    let s = ema(a, slow)?;
    let line: Vec<f64> = f.values.iter().zip(&s.values).map(|(x, y)| x - y).collect();
    let signal = ema(&line, signal_period)?;
    Ok((IndicatorSeries::new(line, 0), signal))
}

/// True range. Bar 0 has no previous close and uses high − low.
pub fn true_range(series: &CandleSeries) -> IndicatorSeries {
    let c = series.candles();
    let mut out = Vec::with_capacity(c.len());
    out.push(c[0].high - c[0].low);
    for w in c.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let tr = (cur.high - cur.low)
            .max(cur.high - prev.close)
            .max(prev.close - cur.low);
        out.push(tr);
    }
    IndicatorSeries::new(out, 0)
}

/// Simple moving average of the true range over `period` bars; the first
/// `period − 1` bars average over what is available.
pub fn atr(series: &CandleSeries, period: usize) -> Result<IndicatorSeries> {
    if period == 0 {
        return Err(Error::InvalidParameter("atr period must be >= 1".into()));
    }
    let tr = true_range(series).values;
    Ok(IndicatorSeries::new(trailing_mean(&tr, period), 0))
}

// Each window is summed directly so an all-zero window yields exactly zero.
fn trailing_mean(x: &[f64], period: usize) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(period);
            let w = &x[lo..=t];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Centered moving average over `2⌊n/2⌋ + 1` bars, defined on
/// `⌊n/2⌋ ..= M−1−⌊n/2⌋`.
pub fn centered_ma(a: &[f64], n: usize) -> Result<IndicatorSeries> {
    if n == 0 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    let half = n / 2;
    let width = 2 * half + 1;
    if a.len() < width {
        return Err(Error::SeriesTooShort(format!(
            "centered average of width {width} needs at least {width} values, got {}",
            a.len()
        )));
    }
    let mut acc = CompensatedSum::default();
    for &v in &a[..width] {
        acc.add(v);
    }
    let count = a.len() - 2 * half;
    let mut out = Vec::with_capacity(count);
    out.push(acc.value() / width as f64);
    for t in half + 1..half + count {
        acc.add(a[t + half]);
        acc.add(-a[t - half - 1]);
        out.push(acc.value() / width as f64);
    }
    Ok(IndicatorSeries::new(out, half))
}
