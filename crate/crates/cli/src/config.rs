//! `key=value` run configuration files. Keys are the long flag names with
//! either `-` or `_`; command-line flags take precedence over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

pub const KEYS: &[&str] = &[
    "input",
    "out_dir",
    "format",
    "seed",
    "symbol",
    "aggregation",
    "start",
    "end",
    "n_min",
    "n_max",
    "t_start",
    "t_stop",
    "t_step",
    "delta_factor",
    "atr_period",
    "timescale",
    "hist_width",
    "hist_cap",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key=value", i + 1);
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", i + 1);
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// The flag value if given, else the parsed file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("invalid value `{v}` for `{key}`: {e}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prefers_flags() {
        let c = ConfigFile::parse("# run\nn-min = 10\nn_max=200\n\n").unwrap();
        assert_eq!(c.pick::<usize>(None, "n_min").unwrap(), Some(10));
        assert_eq!(c.pick(Some(5usize), "n_min").unwrap(), Some(5));
        assert_eq!(c.pick::<usize>(None, "atr_period").unwrap(), None);
        assert!(c.pick::<usize>(None, "n_max").is_ok());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("nonsense").is_err());
        assert!(ConfigFile::parse("colour=blue").is_err());
        let c = ConfigFile::parse("n_min=ten").unwrap();
        assert!(c.pick::<usize>(None, "n_min").is_err());
    }
}
