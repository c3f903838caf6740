//! Timescale calibration: sweep the SAR timescale, measure the average period
//! length of the resulting extrema, and pick the grid point whose period
//! length is closest to the dominant wavelength.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{mid_price_series, CandleSeries};
use crate::par::{self, Execution};
use crate::sar_minmax::{average_period_length, PreparedSeries, SarConfig};
use crate::warning::Warning;
use crate::wavelength::{correlogram_with, Correlogram, WavelengthOptions};

/// φ* below this is reported as a weak wavelength.
pub const WEAK_CORRELATION: f64 = 0.02;

/// Evenly spaced timescales `start, start + step, …, stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for TimescaleGrid {
    fn default() -> Self {
        Self {
            start: 0.4,
            stop: 6.0,
            step: 0.1,
        }
    }
}

impl TimescaleGrid {
    /// Grid values, snapped to 1e-9 so that `0.4 + k·0.1` lands on the
    /// nearest decimal rather than accumulating drift.
    pub fn points(&self) -> Result<Vec<f64>> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.step.is_finite()
            && self.start > 0.0
            && self.step > 0.0
            && self.stop >= self.start;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "timescale grid needs 0 < start <= stop and step > 0, got {}..{} step {}",
                self.start, self.stop, self.step
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub timescale: f64,
    /// `None` when the timescale produced too few extrema.
    pub avg_period_length: Option<f64>,
    /// Confirmed extrema found at this timescale.
    pub extrema_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub points: Vec<CurvePoint>,
    pub selected: Option<f64>,
}

impl CalibrationCurve {
    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .filter_map(|p| p.avg_period_length.map(|l| (p.timescale, l)))
    }

    /// Spearman rank correlation between timescale and period length over the
    /// defined points.
    pub fn monotonicity(&self) -> Option<f64> {
        let (t, p): (Vec<f64>, Vec<f64>) = self.defined().unzip();
        spearman(&t, &p)
    }

    pub fn undefined_count(&self) -> usize {
        self.points.iter().filter(|p| p.avg_period_length.is_none()).count()
    }
}

fn curve_point(prepared: &PreparedSeries<'_>, base: &SarConfig, t: f64) -> Result<CurvePoint> {
    let config = base.with_timescale(t);
    let extrema = match prepared.extrema(&config) {
        Ok(e) => e,
        Err(Error::SeriesTooShort(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let confirmed: Vec<_> = extrema.into_iter().filter(|e| !e.provisional).collect();
    Ok(CurvePoint {
        timescale: t,
        avg_period_length: average_period_length(&confirmed).ok(),
        extrema_count: confirmed.len(),
    })
}

/// Average period length of the confirmed MinMax extrema for every timescale
/// in `grid`. Points are returned sorted by timescale.
pub fn period_length_curve(
    series: &CandleSeries,
    grid: &[f64],
    base: &SarConfig,
    exec: Execution,
) -> Result<CalibrationCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty timescale grid".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!("timescale {t} is not positive")));
    }
    base.validate()?;
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let prepared = PreparedSeries::new(series, base.atr_period)?;
    let points = par::map(&grid, exec, |&t| curve_point(&prepared, base, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if points.iter().all(|p| p.avg_period_length.is_none()) {
        return Err(Error::CalibrationUndefined);
    }
    Ok(CalibrationCurve { points, selected: None })
}

/// Grid timescale whose period length is closest to `n_star`; ties go to the
/// smaller timescale. Undefined points are skipped.
pub fn select_timescale(points: &[CurvePoint], n_star: f64) -> Result<f64> {
    let mut defined: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.avg_period_length.map(|l| (p.timescale, l)))
        .collect();
    defined.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64)> = None;
    for (t, l) in defined {
        let gap = (l - n_star).abs();
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((t, gap));
        }
    }
    best.map(|(t, _)| t).ok_or(Error::CalibrationUndefined)
}

/// Spearman rank correlation (average ranks for ties). `None` if either input
/// is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Everything a downstream trend study needs from calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n_star: usize,
    pub phi_star: f64,
    pub t_star: f64,
    pub correlogram: Correlogram,
    pub curve: CalibrationCurve,
    pub warnings: Vec<Warning>,
}

/// Dominant wavelength, period-length sweep and timescale selection.
pub fn calibrate(
    series: &CandleSeries,
    wavelength: &WavelengthOptions,
    grid: &TimescaleGrid,
    base: &SarConfig,
    exec: Execution,
) -> Result<Calibration> {
    let mid = mid_price_series(series);
    let correlogram = correlogram_with(&mid, wavelength)?;
    let (n_star, phi_star) = correlogram.best;
    let mut warnings = correlogram.warnings.clone();
    if phi_star < WEAK_CORRELATION {
        let w = Warning::WeakCorrelation {
            phi: phi_star,
            threshold: WEAK_CORRELATION,
        };
        warn!("{w}");
        warnings.push(w);
    }

    let points = grid.points()?;
    let mut curve = period_length_curve(series, &points, base, exec)?;
    let undefined = curve.undefined_count();
    if undefined > 0 {
        warnings.push(Warning::UndefinedGridPoints { count: undefined });
    }
    let t_star = select_timescale(&curve.points, n_star as f64)?;
    curve.selected = Some(t_star);
    let first = curve.points.first().map(|p| p.timescale);
    let last = curve.points.last().map(|p| p.timescale);
    if Some(t_star) == first || Some(t_star) == last {
        let w = Warning::TimescaleAtGridEdge { timescale: t_star };
        warn!("{w}");
        warnings.push(w);
    }
    Ok(Calibration {
        n_star,
        phi_star,
        t_star,
        correlogram,
        curve,
        warnings,
    })
}

/// Writes `timescale,avg_period_length,extrema_count,selected` rows; undefined
/// period lengths are left empty.
pub fn write_curve_csv<W: Write>(curve: &CalibrationCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timescale", "avg_period_length", "extrema_count", "selected"])?;
    for p in &curve.points {
        let selected = if curve.selected == Some(p.timescale) { "1" } else { "0" };
        w.write_record([
            p.timescale.to_string(),
            p.avg_period_length.map(|l| l.to_string()).unwrap_or_default(),
            p.extrema_count.to_string(),
            selected.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, l: Option<f64>) -> CurvePoint {
        CurvePoint {
            timescale: t,
            avg_period_length: l,
            extrema_count: 0,
        }
    }

    #[test]
    fn default_grid_has_57_points() {
        let g = TimescaleGrid::default().points().unwrap();
        assert_eq!(g.len(), 57);
        assert_eq!(g[0], 0.4);
        assert_eq!(g[20], 2.4);
        assert_eq!(g[56], 6.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn selection_rules() {
        let linear: Vec<CurvePoint> = (4..=60).map(|k| pt(k as f64 / 10.0, Some(k as f64))).collect();
        assert_eq!(select_timescale(&linear, 30.0).unwrap(), 3.0);
        let tie = [pt(1.1, Some(60.0)), pt(1.0, Some(40.0))];
        assert_eq!(select_timescale(&tie, 50.0).unwrap(), 1.0);
        let gaps = [pt(1.0, None), pt(2.0, Some(10.0)), pt(3.0, None)];
        assert_eq!(select_timescale(&gaps, 100.0).unwrap(), 2.0);
        assert!(select_timescale(&[pt(1.0, None)], 5.0).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }
}
