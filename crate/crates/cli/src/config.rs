//! Parameter resolution: command-line flags win over `key=value` entries of
//! the config file, which win over per-command defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use slabwave::FractionalParams;

/// An invalid invocation; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses a config file: one `key = value` per line, `#` starts a comment
/// line, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(usage(format!(
                "config line {}: duplicate key {key}",
                no + 1
            )));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config(&text)
}

/// The resolved invocation: command name and every parameter it used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, Value>,
}

impl RunConfig {
    /// `key=value` pairs in key order, for CSV comment lines.
    pub fn comment_line(&self) -> String {
        let parts: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        format!("# command={} {}", self.command, parts.join(" "))
    }
}

#[derive(Debug)]
pub struct Resolver {
    command: String,
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    params: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn new(command: &str, file: BTreeMap<String, String>) -> Self {
        Self {
            command: command.to_string(),
            file,
            used: BTreeSet::new(),
            params: BTreeMap::new(),
        }
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config value {key}={raw} does not parse"))),
        }
    }

    fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        let value = serde_json::to_value(v).unwrap_or(Value::Null);
        self.params.insert(key.to_string(), value);
    }

    pub fn value<T: FromStr + Serialize>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        self.used.insert(key.to_string());
        let v = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn optional<T: FromStr + Serialize>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>> {
        self.used.insert(key.to_string());
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    /// Exactly one of `a`, `s` from the flags, else from the file, else
    /// `s = default_s`.
    pub fn fractional(
        &mut self,
        a: Option<f64>,
        s: Option<f64>,
        default_s: f64,
    ) -> Result<FractionalParams> {
        let (fa, fs) = (self.file_value::<f64>("a")?, self.file_value::<f64>("s")?);
        let params = match (a, s) {
            (Some(a), _) => FractionalParams::from_a(a),
            (None, Some(s)) => FractionalParams::from_s(s),
            (None, None) => match (fa, fs) {
                (Some(_), Some(_)) => return Err(usage("config file sets both a and s")),
                (Some(a), None) => FractionalParams::from_a(a),
                (None, Some(s)) => FractionalParams::from_s(s),
                (None, None) => FractionalParams::from_s(default_s),
            },
        }
        .map_err(|e| usage(e.to_string()))?;
        self.record("a", &params.a());
        self.record("s", &params.s());
        Ok(params)
    }

    /// Fails on config keys that no parameter of this command consumed.
    pub fn finish(self) -> Result<RunConfig> {
        let unused: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k) && k.as_str() != "out")
            .collect();
        if !unused.is_empty() {
            return Err(usage(format!(
                "config keys not used by {}: {}",
                self.command,
                unused
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        Ok(RunConfig {
            command: self.command,
            params: self.params,
        })
    }
}

/// Radii as a comma list `10,12.5,15` or a range `start:stop:step`.
pub fn parse_radii(text: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("malformed radii '{text}'"));
    let radii: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [lo, hi, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0 && hi >= lo) {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?
    };
    if radii.len() < 2 || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!(
            "radii '{text}' must be at least two positive, increasing values"
        )));
    }
    Ok(radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let c = parse_config("# run\n\nnx = 64\ntol=1e-8\nxi_min=0.01\n").unwrap();
        assert_eq!(c["nx"], "64");
        assert_eq!(c["tol"], "1e-8");
        assert_eq!(c["xi-min"], "0.01");
        assert!(parse_config("nx 64").is_err());
        assert!(parse_config("nx=1\nnx=2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("nx=64\nmy=9\ns=0.25").unwrap();
        // nx is overridden by its flag and still counts as consumed.
        let mut r = Resolver::new("t", file);
        assert_eq!(r.value("nx", Some(32usize), 16).unwrap(), 32);
        assert_eq!(r.value("my", None, 5usize).unwrap(), 9);
        assert_eq!(r.value("box", None, 2.0f64).unwrap(), 2.0);
        let p = r.fractional(None, None, 0.5).unwrap();
        assert_eq!(p.s(), 0.25);
        let run = r.finish().unwrap();
        assert!(run
            .comment_line()
            .starts_with("# command=t a=0.5 box=2.0 my=9 nx=32"));
    }

    #[test]
    fn both_orders_in_file_rejected() {
        let mut r = Resolver::new("t", parse_config("a=0\ns=0.5").unwrap());
        assert!(r.fractional(None, None, 0.5).is_err());
    }

    #[test]
    fn unused_keys_rejected() {
        let r = Resolver::new("t", parse_config("bogus=1").unwrap());
        assert!(r.finish().is_err());
    }

    #[test]
    fn radii_forms() {
        assert_eq!(parse_radii("10:15:2.5").unwrap(), vec![10.0, 12.5, 15.0]);
        assert_eq!(parse_radii("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_radii("3,2").is_err());
        assert!(parse_radii("1:2").is_err());
        assert!(parse_radii("x").is_err());
    }
}
