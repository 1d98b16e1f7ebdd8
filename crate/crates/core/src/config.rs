//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the long
//! flag names with either `-` or `_` (`n-particles` and `n_particles` are the
//! same key). Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys accepted in configuration files.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "c",
    "n_particles",
    "dt",
    "t_max",
    "k_max",
    "replicas",
    "seed",
    "scheme",
    "out",
    "format",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses file contents; `origin` is used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: {message}", lineno + 1),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
            let key = canonical_key(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(parse_err(format!("unknown key {key:?}")));
            }
            let value = value.trim().trim_matches('"').to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(parse_err(format!("duplicate key {key:?}")));
            }
        }
        Ok(Self {
            path: origin.to_path_buf(),
            entries,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&canonical_key(key)).map(String::as_str)
    }

    /// Typed lookup; a present but malformed value is an error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                path: self.path.clone(),
                message: format!("{key} = {v:?}: {e}"),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_aliases() {
        let text = "# run\nalpha = 1.5\n\nn-particles=200\nscheme = \"radial_square\"\n";
        let cfg = ConfigFile::parse(text, Path::new("x.cfg")).unwrap();
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.get::<f64>("alpha").unwrap(), Some(1.5));
        assert_eq!(cfg.get::<usize>("n_particles").unwrap(), Some(200));
        assert_eq!(cfg.raw("scheme"), Some("radial_square"));
        assert_eq!(cfg.get::<f64>("dt").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        let p = Path::new("bad.cfg");
        assert!(ConfigFile::parse("alpha 1", p).is_err());
        assert!(ConfigFile::parse("gamma = 1", p).is_err());
        assert!(ConfigFile::parse("c = 1\nc = 2", p).is_err());
        let cfg = ConfigFile::parse("dt = fast", p).unwrap();
        let err = cfg.get::<f64>("dt").unwrap_err();
        assert!(err.to_string().contains("bad.cfg"));
    }
}
