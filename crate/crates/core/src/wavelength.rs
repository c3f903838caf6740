//! Dominant wavelength of a chart via shift cross-correlation of the
//! detrended mid-price series.
//!
//! For a shift `n` the mid-price is detrended with a centered average of width
//! `2⌊n/2⌋ + 1`, giving `X^n`. The correlogram value `φ_n` is the uncentered
//! cosine similarity between `X^n_t` and `X^n_{t+n}` over
//! `t = ⌊n/2⌋ ..= N − ⌊n/2⌋` with `N = M − n − 1`. The dominant wavelength is
//! the smallest `n` reaching the maximum `φ_n`.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::centered_ma;
use crate::par::{self, Execution};
use crate::warning::Warning;

/// `X^n_t = a_t − b^n_t`; element `i` belongs to bar `⌊n/2⌋ + i`.
pub fn detrended_series(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let b = centered_ma(a, n)?;
    Ok(b.values
        .iter()
        .enumerate()
        .map(|(i, bt)| a[b.valid_from + i] - bt)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    /// Plain inner-product cosine; the default.
    #[default]
    Uncentered,
    /// Pearson correlation (means removed); for sensitivity checks only.
    Centered,
}

fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "correlation needs equal non-empty lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (u, v) in x.iter().zip(y) {
        xy += u * v;
        xx += u * u;
        yy += v * v;
    }
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok(xy / (xx.sqrt() * yy.sqrt()))
}

/// `⟨x,y⟩ / (‖x‖·‖y‖)` without mean removal.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    cosine(x, y)
}

/// Pearson correlation.
pub fn centered_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return cosine(x, y);
    }
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    cosine(&xc, &yc)
}

/// Number of overlapping samples for shift `n` on a series of length `m`.
fn overlap(m: usize, n: usize) -> Option<usize> {
    m.checked_sub(n + 2 * (n / 2)).filter(|&l| l >= 2)
}

/// Largest shift with at least two overlapping samples.
pub fn max_admissible_shift(m: usize) -> Option<usize> {
    (1..m).take_while(|&n| overlap(m, n).is_some()).last()
}

/// `φ_n` for one shift.
pub fn cross_correlation(a: &[f64], n: usize) -> Result<f64> {
    cross_correlation_with(a, n, CorrelationKind::Uncentered)
}

pub fn cross_correlation_with(a: &[f64], n: usize, kind: CorrelationKind) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("shift must be >= 1".into()));
    }
    let len = overlap(a.len(), n).ok_or(Error::ShiftTooLarge { shift: n, len: a.len() })?;
    let x = detrended_series(a, n)?;
    let (z1, z2) = (&x[..len], &x[n..n + len]);
    match kind {
        CorrelationKind::Uncentered => correlation(z1, z2),
        CorrelationKind::Centered => centered_correlation(z1, z2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthOptions {
    pub n_min: usize,
    pub n_max: usize,
    pub correlation: CorrelationKind,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for WavelengthOptions {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 300,
            correlation: CorrelationKind::Uncentered,
            execution: Execution::default(),
        }
    }
}

/// Correlations this close to the maximum count as ties for the argmax, so
/// that rounding cannot promote a harmonic over the fundamental wavelength.
pub const PHI_TIE_TOLERANCE: f64 = 1e-9;

/// `φ_n` over a range of shifts together with its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub shifts: Vec<usize>,
    pub phi: Vec<f64>,
    /// `(n*, φ*)`
    pub best: (usize, f64),
    pub warnings: Vec<Warning>,
}

impl Correlogram {
    fn from_values(shifts: Vec<usize>, phi: Vec<f64>, warnings: Vec<Warning>) -> Result<Self> {
        let max = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best = shifts
            .iter()
            .zip(&phi)
            .find(|(_, &p)| p >= max - PHI_TIE_TOLERANCE)
            .map(|(&n, &p)| (n, p))
            .ok_or_else(|| Error::InvalidParameter("empty correlogram".into()))?;
        Ok(Self {
            shifts,
            phi,
            best,
            warnings,
        })
    }

    pub fn phi_at(&self, n: usize) -> Option<f64> {
        self.shifts.iter().position(|&s| s == n).map(|i| self.phi[i])
    }
}

/// Correlogram over `n_min..=n_max` with default options.
pub fn correlogram(a: &[f64], n_min: usize, n_max: usize) -> Result<Correlogram> {
    correlogram_with(
        a,
        &WavelengthOptions {
            n_min,
            n_max,
            ..WavelengthOptions::default()
        },
    )
}

/// Correlogram over `opts.n_min..=opts.n_max`. Shifts too large for the
/// series are dropped with a warning; an empty admissible range is an error.
pub fn correlogram_with(a: &[f64], opts: &WavelengthOptions) -> Result<Correlogram> {
    if opts.n_min == 0 || opts.n_min > opts.n_max {
        return Err(Error::InvalidParameter(format!(
            "shift range must satisfy 1 <= n_min <= n_max, got [{}, {}]",
            opts.n_min, opts.n_max
        )));
    }
    let limit = max_admissible_shift(a.len()).unwrap_or(0);
    if limit < opts.n_min {
        return Err(Error::ShiftTooLarge {
            shift: opts.n_min,
            len: a.len(),
        });
    }
    let mut warnings = Vec::new();
    let upper = if opts.n_max > limit {
        let w = Warning::ShiftRangeTruncated {
            requested_max: opts.n_max,
            used_max: limit,
        };
        warn!("{w}");
        warnings.push(w);
        limit
    } else {
        opts.n_max
    };
    let shifts: Vec<usize> = (opts.n_min..=upper).collect();
    let phi = par::map(&shifts, opts.execution, |&n| {
        cross_correlation_with(a, n, opts.correlation)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Correlogram::from_values(shifts, phi, warnings)
}

/// `(n*, φ*)`: the smallest shift whose correlation ties the maximum.
pub fn dominant_wavelength(correlogram: &Correlogram) -> (usize, f64) {
    correlogram.best
}

/// Writes `n,phi,dominant` rows; `dominant` is 1 on the row of `n*`.
pub fn write_correlogram_csv<W: Write>(correlogram: &Correlogram, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "phi", "dominant"])?;
    for (&n, &p) in correlogram.shifts.iter().zip(&correlogram.phi) {
        let flag = if n == correlogram.best.0 { "1" } else { "0" };
        w.write_record([n.to_string(), p.to_string(), flag.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
