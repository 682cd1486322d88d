//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! n = 3
//! f = 2 + cos(x1)
//! ```
//!
//! Keys are lowercase identifiers; a key may appear once. Values run to the
//! end of the line and are kept verbatim (trimmed). A run manifest (JSON with
//! a `"config"` object) is accepted in place of the text form.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    /// Command recorded in a reloaded manifest.
    pub command: Option<String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        if src.trim_start().starts_with('{') {
            Self::from_manifest(&src)
        } else {
            Self::parse(&src)
        }
    }

    pub fn parse(src: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(CliError::Config(format!("line {}: invalid key '{k}'", i + 1)));
            }
            if v.is_empty() {
                return Err(CliError::Config(format!("line {}: key '{k}' has no value", i + 1)));
            }
            if cfg.entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn from_manifest(src: &str) -> Result<Self, CliError> {
        let v: serde_json::Value =
            serde_json::from_str(src).map_err(|e| CliError::Config(format!("manifest is not valid JSON: {e}")))?;
        let obj = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::Config("manifest has no \"config\" object".into()))?;
        let mut cfg = RunConfig {
            command: v.get("command").and_then(|c| c.as_str()).map(String::from),
            ..Default::default()
        };
        for (k, val) in obj {
            let s = val
                .as_str()
                .ok_or_else(|| CliError::Config(format!("manifest config value for '{k}' must be a string")))?;
            if !valid_key(k) {
                return Err(CliError::Config(format!("invalid key '{k}' in manifest")));
            }
            cfg.entries.insert(k.clone(), s.to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Rejects any key outside `allowed`.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        if let Some(c) = &self.command {
            if c != command {
                return Err(CliError::Config(format!("manifest was written by '{c}', not '{command}'")));
            }
        }
        let unknown: Vec<&str> =
            self.entries.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!(
                "unknown key(s) for {command}: {}; allowed: {}",
                unknown.join(", "),
                allowed.join(", ")
            )));
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("cannot parse '{v}' for key '{key}'"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.opt(key)?.ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        let Some(v) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Config(format!("cannot parse '{v}' for key '{key}'"))))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let c = RunConfig::parse("# header\n n = 3 \n\nf = 2 + cos(x1) # not a comment\n").unwrap();
        assert_eq!(c.str("n"), Some("3"));
        assert_eq!(c.str("f"), Some("2 + cos(x1) # not a comment"));
        assert_eq!(c.require::<usize>("n").unwrap(), 3);
    }

    #[test]
    fn rejects_duplicates_and_junk() {
        assert!(RunConfig::parse("n = 3\nn = 4\n").is_err());
        assert!(RunConfig::parse("n 3\n").is_err());
        assert!(RunConfig::parse("N = 3\n").is_err());
        assert!(RunConfig::parse("n =\n").is_err());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let c = RunConfig::parse("n = 3\nbogus = 1\n").unwrap();
        let e = c.check_keys("solve", &["n"]).unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }

    #[test]
    fn manifest_round_trip() {
        let c = RunConfig::parse("n = 3\nf = 1 + r^2\n").unwrap();
        let json = serde_json::json!({ "command": "solve", "config": c.entries() }).to_string();
        let back = RunConfig::from_manifest(&json).unwrap();
        assert_eq!(back.entries(), c.entries());
        assert_eq!(back.command.as_deref(), Some("solve"));
        assert!(back.check_keys("verify", &["n", "f"]).is_err());
    }
}
