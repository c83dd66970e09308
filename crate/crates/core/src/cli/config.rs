use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::util::config_hash;

/// Flat `key = value` settings. Later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(file, i + 1, "expected key = value"))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::parse(file, i + 1, format!("bad key `{k}`")));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(RunConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn merge(&mut self, other: &RunConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The value for `key` parsed as `T`, or `default` when unset.
    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("bad value for {key}: `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .values
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing setting `{key}`")))?;
        v.parse()
            .map_err(|_| Error::Config(format!("bad value for {key}: `{v}`")))
    }

    /// Fails on any key outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!(
                "unknown setting `{k}` (known: {})",
                known.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// Sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        config_hash(&self.canonical())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::parse("# run\nseed = 3\nlr=0.01  # rate\n\n", "c").unwrap();
        c.set_pair("lr=0.02").unwrap();
        assert_eq!(c.get("seed", 0u64).unwrap(), 3);
        assert_eq!(c.get("lr", 0.0f64).unwrap(), 0.02);
        assert_eq!(c.get("epochs", 10usize).unwrap(), 10);
        assert_eq!(c.canonical(), "lr=0.02\nseed=3\n");
    }

    #[test]
    fn errors_are_reported() {
        assert!(RunConfig::parse("novalue\n", "c").unwrap_err().to_string().contains("c:1"));
        let c = RunConfig::parse("seed = x", "c").unwrap();
        assert!(c.get("seed", 0u64).is_err());
        assert!(c.check_known(&["lr"]).is_err());
        assert!(c.check_known(&["seed"]).is_ok());
    }

    #[test]
    fn hash_ignores_order() {
        let a = RunConfig::parse("a=1\nb=2", "x").unwrap();
        let b = RunConfig::parse("b=2\na=1", "x").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
