use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-fatal conditions reported alongside results. The CLI can escalate
/// them to a failure with `--strict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    ShiftRangeTruncated { requested_max: usize, used_max: usize },
    WeakCorrelation { phi: f64, threshold: f64 },
    TimescaleAtGridEdge { timescale: f64 },
    UndefinedGridPoints { count: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ShiftRangeTruncated {
                requested_max,
                used_max,
            } => write!(
                f,
                "shift range truncated: n_max {requested_max} too large for series, using {used_max}"
            ),
            Warning::WeakCorrelation { phi, threshold } => {
                write!(f, "dominant wavelength is weak: phi* = {phi:.4} < {threshold}")
            }
            Warning::TimescaleAtGridEdge { timescale } => {
                write!(f, "selected timescale {timescale} lies on the edge of the sweep grid")
            }
            Warning::UndefinedGridPoints { count } => {
                write!(f, "{count} timescale grid point(s) produced too few extrema")
            }
        }
    }
}
