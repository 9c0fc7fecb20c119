//! `key=value` settings files and flag precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Keys a settings file may set. Dashes and underscores are interchangeable.
pub const KEYS: &[&str] = &[
    "samples",
    "seed",
    "seeds",
    "tol",
    "target",
    "range",
    "points",
    "budget",
    "ceiling",
    "images",
    "labels",
    "test_images",
    "test_labels",
    "data_dir",
    "granularity",
    "init",
    "epochs",
    "batch_size",
    "learning_rate",
    "weight_decay",
    "sigmas",
    "label",
    "out_dir",
];

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "ARCGATE_OUT";

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got {line:?}", i + 1))?;
            let key = normalize(k);
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {:?}", i + 1, k.trim()));
            }
            if values.insert(key, v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {:?}", i + 1, k.trim()));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }

    /// Flag, else file, else `None`.
    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Flag, else file, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    /// Output directory: file, else the environment.
    pub fn out_dir(&self) -> Result<Option<PathBuf>, String> {
        Ok(self
            .get::<PathBuf>("out_dir")?
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)))
    }
}

/// Comma-separated list; empty items and trailing commas are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Err("empty list".into());
        }
        s.split(',')
            .map(|item| {
                let item = item.trim();
                if item.is_empty() {
                    return Err(format!("empty item in list {s:?}"));
                }
                item.parse::<T>().map_err(|e| format!("{item:?}: {e}"))
            })
            .collect::<Result<Vec<T>, String>>()
            .map(List)
    }
}

/// Noise levels: finite, non-negative, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Sigmas(pub Vec<f64>);

impl FromStr for Sigmas {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let List(v) = s.parse::<List<f64>>()?;
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(format!("sigma must be finite and >= 0, got {bad}"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("sigmas must be strictly increasing: {s:?}"));
        }
        Ok(Sigmas(v))
    }
}

/// `LO,HI` or `LO HI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range(pub f64, pub f64);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        let [lo, hi] = parts[..] else {
            return Err(format!("expected LO,HI, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("{hi:?}: {e}"))?;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(format!("range needs finite LO < HI, got {s:?}"));
        }
        Ok(Range(lo, hi))
    }
}
