//! Trend detection on OHLC candle series.
//!
//! The pipeline: estimate the dominant wavelength of the mid-price series
//! ([`wavelength`]), calibrate the timescale of a MACD-driven stop-and-reverse
//! process so that its extrema repeat at that wavelength ([`calibration`]),
//! run the 1-2-3 trend indicator over the extrema ([`trend_engine`]) and
//! summarise the situations it records ([`stats`]).
//!
//! With the default `parallel` feature the correlogram, the timescale sweep
//! and the per-situation metrics run on rayon; [`Execution::Sequential`]
//! selects the plain loop at run time and disabling the feature removes rayon
//! altogether. Both paths give identical results.

pub mod calibration;
pub mod error;
pub mod indicators;
pub mod market_data;
pub mod par;
pub mod sar_minmax;
pub mod stats;
pub mod synth;
pub mod trend_engine;
pub mod warning;
pub mod wavelength;

pub use calibration::{calibrate, Calibration, CalibrationCurve, TimescaleGrid};
pub use error::{Error, Result};
pub use market_data::{load_csv, mid_price_series, read_csv, Candle, CandleSeries, CsvFormat};
pub use par::Execution;
pub use sar_minmax::{Direction, ExtremumEvent, ExtremumKind, SarConfig};
pub use stats::{build_report, run_study, StatsReport, Study};
pub use synth::{generate, SynthSpec};
pub use trend_engine::{run_trend_indicator, Outcome, SituationKind, SituationRecord, Trend, TrendRun};
pub use warning::Warning;
pub use wavelength::{correlogram, correlogram_with, Correlogram, WavelengthOptions};
