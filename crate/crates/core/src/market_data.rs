//! OHLC candle series: CSV ingestion, validation and the mid-price series.
//!
//! All algorithms downstream work on bar index. Timestamps are carried along
//! for reporting only; gaps such as weekends are not represented.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One OHLC bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub index: usize,
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn new(index: usize, timestamp: i64, open: f64, high: f64, low: f64, close: f64) -> Self {
        Self {
            index,
            timestamp,
            open,
            high,
            low,
            close,
        }
    }

    /// Checks the price invariants, returning a human readable reason on failure.
    pub fn check(&self) -> std::result::Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite()) {
            return Err("non-finite price".into());
        }
        if prices.iter().any(|p| *p <= 0.0) {
            return Err("non-positive price".into());
        }
        if self.high < self.low {
            return Err("high < low".into());
        }
        if self.low > self.open.min(self.close) {
            return Err("low above open/close".into());
        }
        if self.high < self.open.max(self.close) {
            return Err("high below open/close".into());
        }
        Ok(())
    }

    /// (high + low) / 2
    pub fn mid(&self) -> f64 {
        (self.high + self.low) / 2.0
    }
}

/// An ordered, validated list of candles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandleSeries {
    candles: Vec<Candle>,
    pub symbol: String,
    pub aggregation: String,
}

impl CandleSeries {
    /// Builds a series, re-numbering candles 0..M-1 in the given order.
    ///
    /// Fails on an empty list, non-increasing timestamps or any candle that
    /// violates the OHLC invariants. Row numbers in errors are 1-based
    /// positions in `candles`.
    pub fn new(symbol: impl Into<String>, aggregation: impl Into<String>, candles: Vec<Candle>) -> Result<Self> {
        if candles.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mut candles = candles;
        for (i, c) in candles.iter_mut().enumerate() {
            c.index = i;
            c.check()
                .map_err(|message| Error::InvalidCandle { row: i + 1, message })?;
        }
        for (i, w) in candles.windows(2).enumerate() {
            if w[1].timestamp == w[0].timestamp {
                return Err(Error::DuplicateTimestamp {
                    row: i + 2,
                    timestamp: w[1].timestamp,
                });
            }
            if w[1].timestamp < w[0].timestamp {
                return Err(Error::InvalidCandle {
                    row: i + 2,
                    message: "timestamps not increasing".into(),
                });
            }
        }
        Ok(Self {
            candles,
            symbol: symbol.into(),
            aggregation: aggregation.into(),
        })
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    /// Always false; a series holds at least one candle.
    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn highs(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.high).collect()
    }

    pub fn lows(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.low).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }

    /// First and last timestamp.
    pub fn period(&self) -> (i64, i64) {
        (
            self.candles[0].timestamp,
            self.candles[self.candles.len() - 1].timestamp,
        )
    }

    /// Sub-series with `start <= timestamp <= end`, re-indexed from zero.
    pub fn between(&self, start: i64, end: i64) -> Result<Self> {
        let picked: Vec<Candle> = self
            .candles
            .iter()
            .filter(|c| c.timestamp >= start && c.timestamp <= end)
            .copied()
            .collect();
        Self::new(self.symbol.clone(), self.aggregation.clone(), picked)
    }
}

/// Mid-price a_t = (high_t + low_t) / 2 for every bar.
pub fn mid_price_series(series: &CandleSeries) -> Vec<f64> {
    series.candles.iter().map(Candle::mid).collect()
}

/// Column names used when reading a candle CSV. Matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFormat {
    pub timestamp: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub delimiter: u8,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            delimiter: b',',
        }
    }
}

// Fallbacks tried for the timestamp column when the configured name is absent.
const TIMESTAMP_ALIASES: &[&str] = &["timestamp", "date", "time", "datetime"];

fn find_column(headers: &csv::StringRecord, name: &str, aliases: &[&str]) -> Result<usize> {
    let lookup = |n: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(n.trim()));
    lookup(name)
        .or_else(|| aliases.iter().find_map(|a| lookup(a)))
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Parses epoch seconds or an ISO-8601 date / date-time (UTC assumed when no
/// offset is given).
pub fn parse_timestamp(text: &str) -> Option<i64> {
    let s = text.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// Formats epoch seconds as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_timestamp(secs: i64) -> String {
    match DateTime::from_timestamp(secs, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => secs.to_string(),
    }
}

fn parse_price(field: &str, row: usize, column: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        row,
        message: format!("invalid {column} value `{field}`"),
    })
}

/// Reads candles from any CSV source. Row numbers in errors are line numbers
/// in the input (the header is line 1).
pub fn read_csv<R: Read>(reader: R, format: &CsvFormat, symbol: &str, aggregation: &str) -> Result<CandleSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => return Err(Error::EmptySeries),
        Err(e) => return Err(e.into()),
    };
    let ts_col = find_column(&headers, &format.timestamp, TIMESTAMP_ALIASES)?;
    let o_col = find_column(&headers, &format.open, &[])?;
    let h_col = find_column(&headers, &format.high, &[])?;
    let l_col = find_column(&headers, &format.low, &[])?;
    let c_col = find_column(&headers, &format.close, &[])?;

    // (line, candle)
    let mut rows: Vec<(usize, Candle)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(rows.len() + 2, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let ts = parse_timestamp(field(ts_col)).ok_or_else(|| Error::Parse {
            row: line,
            message: format!("invalid timestamp `{}`", field(ts_col)),
        })?;
        let candle = Candle::new(
            0,
            ts,
            parse_price(field(o_col), line, "open")?,
            parse_price(field(h_col), line, "high")?,
            parse_price(field(l_col), line, "low")?,
            parse_price(field(c_col), line, "close")?,
        );
        candle
            .check()
            .map_err(|message| Error::InvalidCandle { row: line, message })?;
        rows.push((line, candle));
    }
    if rows.is_empty() {
        return Err(Error::EmptySeries);
    }
    rows.sort_by_key(|(_, c)| c.timestamp);
    for w in rows.windows(2) {
        if w[0].1.timestamp == w[1].1.timestamp {
            return Err(Error::DuplicateTimestamp {
                row: w[1].0,
                timestamp: w[1].1.timestamp,
            });
        }
    }
    CandleSeries::new(symbol, aggregation, rows.into_iter().map(|(_, c)| c).collect())
}

/// Loads and validates a candle CSV file.
pub fn load_csv(path: impl AsRef<Path>, format: &CsvFormat) -> Result<CandleSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, format, &symbol, "")
}

/// Writes the series in the same dialect `read_csv` accepts (default column
/// names, ISO-8601 timestamps, shortest round-trip decimals).
pub fn write_csv<W: Write>(series: &CandleSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "open", "high", "low", "close"])?;
    for c in series.candles() {
        w.write_record([
            format_timestamp(c.timestamp),
            c.open.to_string(),
            c.high.to_string(),
            c.low.to_string(),
            c.close.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<CandleSeries> {
        read_csv(text.as_bytes(), &CsvFormat::default(), "T", "1d")
    }

    #[test]
    fn maps_fields_directly() {
        let s = read("timestamp,open,high,low,close\n2011-01-03,1.3350,1.3400,1.3300,1.3380\n").unwrap();
        let c = s.candles()[0];
        assert_eq!((c.open, c.high, c.low, c.close), (1.3350, 1.3400, 1.3300, 1.3380));
        assert_eq!(c.timestamp, 1_294_012_800);
    }

    #[test]
    fn rejects_high_below_low() {
        let err = read("timestamp,open,high,low,close\n1,1.5,1.0,2.0,1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("high < low at row 2"), "{msg}");
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(read(""), Err(Error::EmptySeries)));
        assert!(matches!(
            read("timestamp,open,high,low,close\n"),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn reports_parse_row() {
        let err = read("timestamp,open,high,low,close\n1,1,1,1,1\n2,1,x,1,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn sorts_and_rejects_duplicates() {
        let s = read("timestamp,open,high,low,close\n20,2,2,2,2\n10,1,1,1,1\n").unwrap();
        assert_eq!(s.candles()[0].close, 1.0);
        assert_eq!(s.candles()[1].index, 1);
        let err = read("timestamp,open,high,low,close\n10,2,2,2,2\n10,1,1,1,1\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateTimestamp { .. }));
    }

    #[test]
    fn header_map_is_configurable() {
        let fmt = CsvFormat {
            timestamp: "Date".into(),
            open: "O".into(),
            high: "H".into(),
            low: "L".into(),
            close: "C".into(),
            delimiter: b';',
        };
        let s = read_csv(
            "C;H;L;O;Date\n4;5;3;4;2020-01-01 10:00:00\n".as_bytes(),
            &fmt,
            "X",
            "1h",
        )
        .unwrap();
        assert_eq!(s.candles()[0].high, 5.0);
    }

    #[test]
    fn mid_price() {
        let s = CandleSeries::new(
            "T",
            "1d",
            vec![
                Candle::new(0, 0, 9.0, 10.0, 8.0, 9.0),
                Candle::new(0, 1, 5.0, 5.0, 5.0, 5.0),
            ],
        )
        .unwrap();
        assert_eq!(mid_price_series(&s), vec![9.0, 5.0]);
    }

    #[test]
    fn timestamps_parse() {
        assert_eq!(parse_timestamp("86400"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02T00:00:00Z"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02T01:00:00+01:00"), Some(86_400));
        assert_eq!(format_timestamp(86_400), "1970-01-02T00:00:00Z");
        assert_eq!(parse_timestamp("yesterday"), None);
    }
}
