//! Flat `key = value` run configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parsed configuration. Every value read through the getters (defaults
/// included) is recorded for the manifest.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "line {}: expected key = value, got `{line}`",
                    i + 1
                )));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::Usage(format!("line {}: empty key", i + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Usage(format!("key `{k}` given twice")));
            }
        }
        Ok(Config {
            values,
            resolved: BTreeMap::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Command-line overrides win over the file.
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Rejects keys the subcommand does not know.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        match self.values.keys().find(|k| !allowed.contains(k.as_str())) {
            Some(k) => Err(CliError::Usage(format!(
                "unknown key `{k}` for `{command}` (accepted: {})",
                allowed.into_iter().collect::<Vec<_>>().join(", ")
            ))),
            None => Ok(()),
        }
    }

    fn parse_value<T: FromStr>(&mut self, key: &str, raw: String) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = raw
            .parse()
            .map_err(|e| CliError::Usage(format!("key `{key}`: cannot parse `{raw}`: {e}")))?;
        self.resolved.insert(key.to_string(), raw);
        Ok(v)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self
            .values
            .get(key)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("missing required key `{key}`")))?;
        self.parse_value(key, raw)
    }

    pub fn get_or<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(key).cloned() {
            Some(raw) => self.parse_value(key, raw),
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(key).cloned() {
            Some(raw) => self.parse_value(key, raw).map(Some),
            None => Ok(None),
        }
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr + Display + Clone>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let Some(raw) = self.values.get(key).cloned() else {
            let joined: Vec<String> = default.iter().map(|d| d.to_string()).collect();
            self.resolved.insert(key.to_string(), joined.join(","));
            return Ok(default.to_vec());
        };
        let out = raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::Usage(format!("key `{key}`: cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        self.resolved.insert(key.to_string(), raw);
        Ok(out)
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let mut c = Config::parse("# run\nbeta = 0.3  # subcritical\n\nq=2\n").unwrap();
        assert_eq!(c.require::<f64>("beta").unwrap(), 0.3);
        assert_eq!(c.get_or("chains", 4usize).unwrap(), 4);
        assert_eq!(c.resolved().get("chains").unwrap(), "4");
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = Config::parse("q = two\n").unwrap();
        let e = c.require::<f64>("q").unwrap_err().to_string();
        assert!(e.contains("`q`"), "{e}");
        let e = c.require::<f64>("beta").unwrap_err().to_string();
        assert!(e.contains("`beta`"), "{e}");
        let e = c.check_keys("sample", &["beta"]).unwrap_err().to_string();
        assert!(e.contains("`q`"), "{e}");
        assert!(Config::parse("a = 1\na = 2").is_err());
        assert!(Config::parse("novalue").is_err());
    }

    #[test]
    fn lists() {
        let mut c = Config::parse("distances = 2, 3,5").unwrap();
        assert_eq!(c.list_or::<f64>("distances", &[]).unwrap(), vec![2.0, 3.0, 5.0]);
        assert_eq!(c.list_or("radii", &[1i32, 2]).unwrap(), vec![1, 2]);
    }
}
