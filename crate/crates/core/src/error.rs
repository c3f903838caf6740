use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the trendwave library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("parse failure at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("{message} at row {row}")]
    InvalidCandle { row: usize, message: String },

    #[error("duplicate timestamp {timestamp} at row {row}")]
    DuplicateTimestamp { row: usize, timestamp: i64 },

    #[error("empty series")]
    EmptySeries,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("degenerate vector: zero norm")]
    DegenerateVector,

    #[error("shift too large for series (shift {shift}, length {len})")]
    ShiftTooLarge { shift: usize, len: usize },

    #[error("insufficient extrema")]
    InsufficientExtrema,

    #[error("series too short for calibration")]
    CalibrationUndefined,

    #[error("degenerate situation: {0}")]
    Degenerate(&'static str),

    #[error("trend was never activated")]
    NotActivated,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
