//! Flat key-value scenario configs.
//!
//! The format is one `dotted.key = value` pair per line, `#` comments, no
//! nesting. Values are plain strings; typed accessors parse them on demand
//! and remember which keys were touched so a finished build can flag typos.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use hamot_core::expr;
use hamot_core::field::{ScalarField, TimeFn};

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at key '{}': {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

pub struct Config {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(err(
                    "",
                    format!("line {}: expected 'key = value', got '{line}'", lineno + 1),
                ));
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return Err(err("", format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(err(&key, "duplicate key"));
            }
        }
        Ok(Config {
            map,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(|s| s.as_str());
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| err(key, "missing required key"))
    }

    /// Numeric value, parsed through the expression grammar so constants
    /// like `pi` or `2*sqrt(0.5)` are legal wherever a number is.
    pub fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(src) => Ok(Some(parse_const(key, src)?)),
        }
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(src) => src
                .parse::<usize>()
                .map(Some)
                .map_err(|_| err(key, format!("expected a nonnegative integer, got '{src}'"))),
        }
    }

    pub fn seed(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(src) => src
                .parse::<u64>()
                .map(Some)
                .map_err(|_| err(key, format!("expected an unsigned integer, got '{src}'"))),
        }
    }

    pub fn field(&self, key: &str, dim: usize) -> Result<Option<ScalarField>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(src) => ScalarField::parse(src, dim)
                .map(Some)
                .map_err(|e| err(key, e.to_string())),
        }
    }

    pub fn timefn(&self, key: &str) -> Result<Option<TimeFn>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(src) => TimeFn::parse(src).map(Some).map_err(|e| err(key, e.to_string())),
        }
    }

    /// Comma-separated list of `lo:hi` ranges, endpoints in the constant
    /// expression grammar: `-pi:pi, 0.5:pi-0.5`.
    pub fn ranges(&self, key: &str) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
        let Some(src) = self.get(key) else { return Ok(None) };
        let mut out = Vec::new();
        for part in src.split(',') {
            let Some(colon) = split_range(part) else {
                return Err(err(key, format!("expected 'lo:hi', got '{}'", part.trim())));
            };
            let lo = parse_const(key, &part[..colon])?;
            let hi = parse_const(key, &part[colon + 1..])?;
            if !(lo < hi) {
                return Err(err(key, format!("range {lo}:{hi} is not increasing")));
            }
            out.push((lo, hi));
        }
        Ok(Some(out))
    }

    /// Semicolon-separated points with colon-separated coordinates:
    /// `0.9:0.7; 1.3:-0.4`.
    pub fn points(&self, key: &str, dim: usize) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        let Some(src) = self.get(key) else { return Ok(None) };
        let mut out = Vec::new();
        for part in src.split(';') {
            let coords: Vec<f64> = part
                .split(':')
                .map(|c| parse_const(key, c))
                .collect::<Result<_, _>>()?;
            if coords.len() != dim {
                return Err(err(
                    key,
                    format!("point '{}' has {} coordinates, chart has {dim}", part.trim(), coords.len()),
                ));
            }
            out.push(coords);
        }
        Ok(Some(out))
    }

    /// Comma-separated list value.
    pub fn list(&self, key: &str) -> Result<Vec<String>, ConfigError> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(src) => Ok(src.split(',').map(|s| s.trim().to_string()).collect()),
        }
    }

    /// Errors on any key that no accessor ever consumed.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        for key in self.map.keys() {
            if !used.contains(key) {
                return Err(err(key, "unknown key"));
            }
        }
        Ok(())
    }
}

/// Splits on the range colon while leaving colons inside nothing (the
/// grammar has no other use for ':'), tolerating a leading sign.
fn split_range(part: &str) -> Option<usize> {
    part.find(':')
}

fn parse_const(key: &str, src: &str) -> Result<f64, ConfigError> {
    let e = expr::parse(src.trim()).map_err(|e| err(key, e.to_string()))?;
    if e.uses_time() || e.max_coord() > 0 {
        return Err(err(key, format!("'{}' must be a constant", src.trim())));
    }
    Ok(e.eval(0.0, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_flags_unknowns() {
        let c = Config::parse("a.b = 1\n# note\nc = hi\n").unwrap();
        assert_eq!(c.number("a.b").unwrap(), Some(1.0));
        assert!(c.finish().is_err());
        assert_eq!(c.get("c"), Some("hi"));
        c.finish().unwrap();
    }

    #[test]
    fn rejects_duplicates_and_bad_lines() {
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        assert!(Config::parse("just words\n").is_err());
    }

    #[test]
    fn constant_expressions_in_numbers_and_ranges() {
        let c = Config::parse("w = 2*sqrt(0.25)\nbox = -pi:pi, 0.5:pi-0.5\n").unwrap();
        assert_eq!(c.number("w").unwrap(), Some(1.0));
        let r = c.ranges("box").unwrap().unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0 + std::f64::consts::PI).abs() < 1e-15);
        assert!((r[1].1 - (std::f64::consts::PI - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn points_need_the_chart_dimension() {
        let c = Config::parse("pts = 0.9:0.7; 1.3:-0.4\n").unwrap();
        let p = c.points("pts", 2).unwrap().unwrap();
        assert_eq!(p, vec![vec![0.9, 0.7], vec![1.3, -0.4]]);
        let c = Config::parse("pts = 0.9:0.7:1.0\n").unwrap();
        assert!(c.points("pts", 2).is_err());
    }
}
