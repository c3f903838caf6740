//! Seeded synthetic charts used as fixtures: sines with known wavelength,
//! piecewise-linear staircases with known pivots, and random walks.
//!
//! Output is bit-identical on every IEEE-754 platform. Randomness comes from
//! SplitMix64 and the only floating-point operations are `+ − × ÷`, `floor`
//! and `round`, all exactly specified:
//!
//! * SplitMix64: `state += 0x9E3779B97F4A7C15; z = state;
//!   z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) * 0x94D049BB133111EB;
//!   return z ^ z>>31` (wrapping arithmetic).
//! * uniform in `[0,1)`: `(next() >> 11) · 2⁻⁵³`.
//! * standard normal (approximate, bounded to ±6): sum of 12 uniforms − 6.
//! * sine: range reduction to `[−π/2, π/2]` followed by a degree-19 Taylor
//!   polynomial in Horner form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{Candle, CandleSeries};
use crate::sar_minmax::{ExtremumEvent, ExtremumKind};

/// 2000-01-01T00:00:00Z
const EPOCH: i64 = 946_684_800;
const DAY: i64 = 86_400;

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    /// Approximately standard normal (Irwin–Hall with 12 terms).
    pub fn normal(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..12 {
            s += self.uniform();
        }
        s - 6.0
    }
}

/// `sin(2π·turns)` from basic arithmetic only.
pub fn sin_turns(turns: f64) -> f64 {
    const PI: f64 = std::f64::consts::PI;
    let g = turns - turns.round();
    let mut y = 2.0 * PI * g;
    if y > PI / 2.0 {
        y = PI - y;
    } else if y < -PI / 2.0 {
        y = -PI - y;
    }
    let y2 = y * y;
    // Taylor coefficients 1/k! for odd k up to 19, alternating sign.
    let mut p = -1.0 / 121_645_100_408_832_000.0;
    for c in [
        1.0 / 355_687_428_096_000.0,
        -1.0 / 1_307_674_368_000.0,
        1.0 / 6_227_020_800.0,
        -1.0 / 39_916_800.0,
        1.0 / 362_880.0,
        -1.0 / 5_040.0,
        1.0 / 120.0,
        -1.0 / 6.0,
        1.0,
    ] {
        p = p * y2 + c;
    }
    p * y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineSpec {
    pub length: usize,
    pub period: f64,
    pub amplitude: f64,
    /// Mean level of the mid-price.
    pub base: f64,
    /// `high = mid + half_range`, `low = mid − half_range`.
    pub half_range: f64,
    /// Added per bar.
    pub drift: f64,
    /// Standard deviation of i.i.d. noise on the mid-price.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SineSpec {
    fn default() -> Self {
        Self {
            length: 5000,
            period: 50.0,
            amplitude: 10.0,
            base: 100.0,
            half_range: 0.2,
            drift: 0.0,
            noise_sigma: 0.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkSpec {
    pub length: usize,
    pub start: f64,
    /// Per-bar relative step standard deviation.
    pub volatility: f64,
    /// Per-bar relative drift.
    pub drift: f64,
    /// Relative wick added above the body high and below the body low.
    pub wick: f64,
    pub seed: u64,
}

impl Default for RandomWalkSpec {
    fn default() -> Self {
        Self {
            length: 5000,
            start: 100.0,
            volatility: 0.01,
            drift: 0.0,
            wick: 0.002,
            seed: 1,
        }
    }
}

/// A staircase pivot: the path passes through `price` at bar `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pivot {
    pub at: usize,
    pub price: f64,
    /// Identification bar handed to [`staircase_extrema`]; defaults to the
    /// next pivot's bar (the last bar for the final pivot).
    pub identified_at: Option<usize>,
}

impl Pivot {
    pub fn new(at: usize, price: f64) -> Self {
        Self {
            at,
            price,
            identified_at: None,
        }
    }
}

/// Piecewise-linear path through alternating pivots. Candles are wickless:
/// `open` is the previous path value, `close` the current one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSpec {
    pub pivots: Vec<Pivot>,
    /// Flat bars appended after the last pivot.
    pub tail: usize,
}

impl StaircaseSpec {
    /// Random alternating pivots starting with a minimum, with regime-biased
    /// swing sizes, gaps of 2..=8 bars and identification lags inside the
    /// following leg.
    pub fn random(seed: u64, count: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut pivots = Vec::with_capacity(count);
        let mut at = 0usize;
        let mut price = 100.0;
        let mut regime = 1.0f64;
        for k in 0..count {
            if k > 0 {
                if rng.uniform() < 0.25 {
                    regime = -regime;
                }
                let rising = k % 2 == 1;
                let with_regime = (regime > 0.0) == rising;
                let size = if with_regime {
                    rng.range(2.0, 6.0)
                } else {
                    rng.range(1.0, 5.0)
                };
                price += if rising { size } else { -size };
                at += rng.int(2, 8);
            }
            pivots.push(Pivot::new(at, price));
        }
        let tail = rng.int(2, 6);
        let len = at + tail + 1;
        for k in 0..pivots.len() {
            let next = pivots.get(k + 1).map_or(len - 1, |p| p.at);
            let lo = pivots[k].at + 1;
            pivots[k].identified_at = Some(rng.int(lo, next.max(lo)));
        }
        Self { pivots, tail }
    }

    fn validate(&self) -> Result<()> {
        if self.pivots.len() < 2 {
            return Err(Error::InvalidParameter("staircase needs at least two pivots".into()));
        }
        for w in self.pivots.windows(2) {
            if w[1].at <= w[0].at {
                return Err(Error::InvalidParameter("pivot bars must increase".into()));
            }
            if w[1].price == w[0].price {
                return Err(Error::InvalidParameter(
                    "consecutive pivots need distinct prices".into(),
                ));
            }
        }
        for w in self.pivots.windows(3) {
            if (w[1].price - w[0].price).signum() == (w[2].price - w[1].price).signum() {
                return Err(Error::InvalidParameter(
                    "pivots must alternate between highs and lows".into(),
                ));
            }
        }
        if self.pivots.iter().any(|p| !(p.price.is_finite() && p.price > 0.0)) {
            return Err(Error::InvalidParameter("pivot prices must be positive".into()));
        }
        Ok(())
    }

    fn length(&self) -> usize {
        self.pivots.last().map_or(0, |p| p.at) + self.tail + 1
    }

    fn path(&self) -> Vec<f64> {
        let len = self.length();
        let first = self.pivots[0];
        let mut path = vec![first.price; first.at + 1];
        for w in self.pivots.windows(2) {
            let span = (w[1].at - w[0].at) as f64;
            for t in w[0].at + 1..=w[1].at {
                let f = (t - w[0].at) as f64 / span;
                path.push(w[0].price + (w[1].price - w[0].price) * f);
            }
        }
        let last = path[path.len() - 1];
        path.resize(len, last);
        path
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthSpec {
    Sine(SineSpec),
    TrendStaircase(StaircaseSpec),
    RandomWalk(RandomWalkSpec),
}

fn ts(t: usize) -> i64 {
    EPOCH + t as i64 * DAY
}

fn finish(symbol: &str, candles: Vec<Candle>) -> Result<CandleSeries> {
    CandleSeries::new(symbol, "1d", candles).map_err(|e| match e {
        Error::InvalidCandle { row, message } => {
            Error::InvalidParameter(format!("spec produces an invalid candle at bar {}: {message}", row - 1))
        }
        other => other,
    })
}

fn sine(spec: &SineSpec) -> Result<CandleSeries> {
    if spec.length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    if spec.period.is_nan() || spec.period < 2.0 {
        return Err(Error::InvalidParameter("sine period must be >= 2".into()));
    }
    if spec.noise_sigma.is_nan() || spec.noise_sigma < 0.0 || spec.half_range.is_nan() || spec.half_range < 0.0 {
        return Err(Error::InvalidParameter(
            "noise and half range must be non-negative".into(),
        ));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut candles = Vec::with_capacity(spec.length);
    let mut prev_mid = None;
    for t in 0..spec.length {
        let noise = if spec.noise_sigma > 0.0 {
            spec.noise_sigma * rng.normal()
        } else {
            0.0
        };
        let mid = spec.base + spec.amplitude * sin_turns(t as f64 / spec.period) + spec.drift * t as f64 + noise;
        let (high, low) = (mid + spec.half_range, mid - spec.half_range);
        let open = prev_mid.unwrap_or(mid).clamp(low, high);
        candles.push(Candle::new(t, ts(t), open, high, low, mid));
        prev_mid = Some(mid);
    }
    finish("SYNTH-SINE", candles)
}

fn random_walk(spec: &RandomWalkSpec) -> Result<CandleSeries> {
    if spec.length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    // Steps are bounded by ±6σ, so this keeps every price positive.
    if !(spec.volatility >= 0.0 && spec.drift.abs() + 6.0 * spec.volatility < 1.0) {
        return Err(Error::InvalidParameter("need |drift| + 6·volatility < 1".into()));
    }
    if spec.start.is_nan() || spec.start <= 0.0 || !(0.0..1.0).contains(&spec.wick) {
        return Err(Error::InvalidParameter(
            "start must be positive and wick in [0, 1)".into(),
        ));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut candles = Vec::with_capacity(spec.length);
    let mut prev = spec.start;
    for t in 0..spec.length {
        let close = if t == 0 {
            spec.start
        } else {
            prev * (1.0 + spec.drift + spec.volatility * rng.normal())
        };
        let high = prev.max(close) * (1.0 + spec.wick);
        let low = prev.min(close) * (1.0 - spec.wick);
        candles.push(Candle::new(t, ts(t), prev, high, low, close));
        prev = close;
    }
    finish("SYNTH-RW", candles)
}

fn staircase(spec: &StaircaseSpec) -> Result<CandleSeries> {
    spec.validate()?;
    let path = spec.path();
    let candles = path
        .iter()
        .enumerate()
        .map(|(t, &close)| {
            let open = if t == 0 { close } else { path[t - 1] };
            Candle::new(t, ts(t), open, open.max(close), open.min(close), close)
        })
        .collect();
    finish("SYNTH-STAIRCASE", candles)
}

/// Generates the candle series described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<CandleSeries> {
    match spec {
        SynthSpec::Sine(s) => sine(s),
        SynthSpec::TrendStaircase(s) => staircase(s),
        SynthSpec::RandomWalk(s) => random_walk(s),
    }
}

/// The staircase pivots as confirmed extrema (ground truth for the trend
/// engine).
pub fn staircase_extrema(spec: &StaircaseSpec) -> Result<Vec<ExtremumEvent>> {
    spec.validate()?;
    let len = spec.length();
    let p = &spec.pivots;
    Ok(p.iter()
        .enumerate()
        .map(|(k, pv)| {
            let neighbour = if k + 1 < p.len() {
                p[k + 1].price
            } else {
                p[k - 1].price
            };
            let kind = if pv.price > neighbour {
                ExtremumKind::Maximum
            } else {
                ExtremumKind::Minimum
            };
            let default_id = p.get(k + 1).map_or(len - 1, |n| n.at);
            ExtremumEvent {
                kind,
                at: pv.at,
                price: pv.price,
                identified_at: pv.identified_at.unwrap_or(default_id).max(pv.at),
                provisional: false,
            }
        })
        .collect())
}
