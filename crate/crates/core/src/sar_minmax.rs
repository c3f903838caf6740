//! MACD-driven stop-and-reverse (SAR) process with ATR hysteresis, and the
//! MinMax extraction of alternating relevant extrema.
//!
//! The SAR direction is up while `macd − signal` has last exceeded `+δ_t`
//! and down while it has last fallen below `−δ_t`, with
//! `δ_t = delta_factor · ATR_t(atr_period)` evaluated per bar. The MACD runs on
//! the mid-price series. Every maximal up-run contributes one maximum (highest
//! high, earliest on ties) and every down-run one minimum (lowest low). An
//! extremum is identified at the bar where the SAR leaves its run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{atr, macd, IndicatorSeries};
use crate::market_data::{mid_price_series, CandleSeries};

/// Trend or SAR direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// +1 for up, −1 for down.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// Parameters of the SAR process. `timescale` scales the MACD defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarConfig {
    pub timescale: f64,
    pub delta_factor: f64,
    pub atr_period: usize,
    pub macd_defaults: (usize, usize, usize),
}

impl Default for SarConfig {
    fn default() -> Self {
        Self {
            timescale: 1.0,
            delta_factor: 0.3,
            atr_period: 100,
            macd_defaults: (12, 26, 9),
        }
    }
}

impl SarConfig {
    pub fn with_timescale(self, timescale: f64) -> Self {
        Self { timescale, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timescale.is_finite() && self.timescale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "timescale must be positive, got {}",
                self.timescale
            )));
        }
        if !(self.delta_factor.is_finite() && self.delta_factor >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta factor must be non-negative, got {}",
                self.delta_factor
            )));
        }
        if self.atr_period == 0 {
            return Err(Error::InvalidParameter("atr period must be >= 1".into()));
        }
        Ok(())
    }
}

/// MACD periods for the configured timescale: each default multiplied by the
/// timescale, rounded, clamped to at least 1. A fast/slow collision bumps the
/// slow period.
pub fn scaled_macd_params(config: &SarConfig) -> Result<(usize, usize, usize)> {
    config.validate()?;
    let t = config.timescale;
    let scale = |p: usize| ((p as f64 * t).round() as usize).max(1);
    let (f, s, g) = config.macd_defaults;
    let fast = scale(f);
    let mut slow = scale(s);
    if slow <= fast {
        slow = fast + 1;
    }
    Ok((fast, slow, scale(g)))
}

/// Per-bar SAR direction; `None` until the first threshold crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarSeries {
    pub direction: Vec<Option<Direction>>,
    /// Bars where the direction switched between up and down.
    pub flip_indices: Vec<usize>,
}

impl SarSeries {
    pub fn len(&self) -> usize {
        self.direction.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direction.is_empty()
    }

    /// First bar with a defined direction.
    pub fn first_defined(&self) -> Option<usize> {
        self.direction.iter().position(Option::is_some)
    }
}

/// Timescale-independent inputs of the SAR process, computed once per series.
#[derive(Debug, Clone)]
pub struct PreparedSeries<'a> {
    pub series: &'a CandleSeries,
    pub mid: Vec<f64>,
    pub atr: IndicatorSeries,
    pub atr_period: usize,
}

impl<'a> PreparedSeries<'a> {
    pub fn new(series: &'a CandleSeries, atr_period: usize) -> Result<Self> {
        Ok(Self {
            series,
            mid: mid_price_series(series),
            atr: atr(series, atr_period)?,
            atr_period,
        })
    }

    /// Runs the SAR process for `config`. The config's ATR period must match
    /// the one this value was prepared with.
    pub fn sar(&self, config: &SarConfig) -> Result<SarSeries> {
        if config.atr_period != self.atr_period {
            return Err(Error::InvalidParameter(format!(
                "prepared with atr period {}, config asks for {}",
                self.atr_period, config.atr_period
            )));
        }
        let (fast, slow, signal) = scaled_macd_params(config)?;
        let m = self.mid.len();
        if m <= slow {
            return Err(Error::SeriesTooShort(format!(
                "SAR with slow period {slow} needs more than {slow} bars, got {m}"
            )));
        }
        let (line, sig) = macd(&self.mid, fast, slow, signal)?;
        let mut direction = Vec::with_capacity(m);
        let mut flips = Vec::new();
        let mut state: Option<Direction> = None;
        for t in 0..m {
            let d = line.values[t] - sig.values[t];
            let delta = config.delta_factor * self.atr.values[t];
            // The strict sign test keeps a flat market (d = δ = 0) undefined.
            let next = if d >= delta && d > 0.0 {
                Some(Direction::Up)
            } else if d <= -delta && d < 0.0 {
                Some(Direction::Down)
            } else {
                None
            };
            if let Some(dir) = next {
                if state.is_some_and(|s| s != dir) {
                    flips.push(t);
                }
                state = Some(dir);
            }
            direction.push(state);
        }
        Ok(SarSeries {
            direction,
            flip_indices: flips,
        })
    }

    /// SAR process followed by MinMax extraction.
    pub fn extrema(&self, config: &SarConfig) -> Result<Vec<ExtremumEvent>> {
        let sar = self.sar(config)?;
        minmax_extrema(self.series, &sar)
    }
}

/// Runs the SAR process on `series`.
pub fn sar_process(series: &CandleSeries, config: &SarConfig) -> Result<SarSeries> {
    config.validate()?;
    PreparedSeries::new(series, config.atr_period)?.sar(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Minimum,
    Maximum,
}

impl ExtremumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Minimum => "min",
            ExtremumKind::Maximum => "max",
        }
    }
}

/// A relevant minimum or maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumEvent {
    pub kind: ExtremumKind,
    /// Bar where the extremum occurred.
    pub at: usize,
    pub price: f64,
    /// Bar at which the extremum became known.
    pub identified_at: usize,
    /// The run was still open at the end of the series.
    pub provisional: bool,
}

/// One extremum per SAR run: the highest high of an up-run, the lowest low of
/// a down-run.
pub fn minmax_extrema(series: &CandleSeries, sar: &SarSeries) -> Result<Vec<ExtremumEvent>> {
    let candles = series.candles();
    if sar.len() != candles.len() {
        return Err(Error::InvalidParameter(format!(
            "SAR length {} does not match series length {}",
            sar.len(),
            candles.len()
        )));
    }
    let Some(start) = sar.first_defined() else {
        return Ok(Vec::new());
    };
    let last = candles.len() - 1;
    let mut bounds = Vec::with_capacity(sar.flip_indices.len() + 1);
    let mut run_start = start;
    for &flip in &sar.flip_indices {
        bounds.push((run_start, flip));
        run_start = flip;
    }
    bounds.push((run_start, last + 1));

    let events = bounds
        .into_iter()
        .map(|(s, e)| {
            let dir = sar.direction[s].expect("runs start on defined bars");
            let run = &candles[s..e];
            let (offset, price, kind) = match dir {
                Direction::Up => {
                    let (i, c) =
                        run.iter().enumerate().fold(
                            (0, &run[0]),
                            |best, cur| if cur.1.high > best.1.high { cur } else { best },
                        );
                    (i, c.high, ExtremumKind::Maximum)
                }
                Direction::Down => {
                    let (i, c) =
                        run.iter().enumerate().fold(
                            (0, &run[0]),
                            |best, cur| if cur.1.low < best.1.low { cur } else { best },
                        );
                    (i, c.low, ExtremumKind::Minimum)
                }
            };
            let provisional = e > last;
            ExtremumEvent {
                kind,
                at: s + offset,
                price,
                identified_at: if provisional { last } else { e },
                provisional,
            }
        })
        .collect();
    Ok(events)
}

/// Mean distance between consecutive minima and between consecutive maxima,
/// pooled into one mean.
pub fn average_period_length(extrema: &[ExtremumEvent]) -> Result<f64> {
    let mut total = 0usize;
    let mut count = 0usize;
    for kind in [ExtremumKind::Minimum, ExtremumKind::Maximum] {
        let ats: Vec<usize> = extrema.iter().filter(|e| e.kind == kind).map(|e| e.at).collect();
        for w in ats.windows(2) {
            total += w[1] - w[0];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientExtrema);
    }
    Ok(total as f64 / count as f64)
}

/// Writes `kind,at,price,identified_at,provisional` rows.
pub fn write_extrema_csv<W: Write>(extrema: &[ExtremumEvent], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "at", "price", "identified_at", "provisional"])?;
    for e in extrema {
        w.write_record([
            e.kind.as_str().to_string(),
            e.at.to_string(),
            e.price.to_string(),
            e.identified_at.to_string(),
            e.provisional.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
