//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the long
//! flag names without dashes (`dim`, `family`, `tol`, ...). A flag on the
//! command line always wins over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub const KEYS: &[&str] = &[
    "dim", "dims", "family", "mode", "pattern", "outcome", "out", "format", "seed", "threads",
    "tol", "force", "check", "basis", "protocol", "plot", "schedule", "table",
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
            let k = k.trim().replace('-', "_");
            let k = k.replace('_', "");
            if !KEYS.contains(&k.as_str()) {
                return Err(format!("config line {}: unknown key '{}'", n + 1, k));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("config key '{key}' = '{v}': {e}")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, String> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(format!("config key '{key}' = '{v}': expected true or false")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let c = ConfigFile::parse("# comment\ndim = 6\n\nfamily=shifted:3\nforce = true\n").unwrap();
        assert_eq!(c.get::<usize>("dim").unwrap(), Some(6));
        assert_eq!(c.get::<String>("family").unwrap().as_deref(), Some("shifted:3"));
        assert!(c.flag("force").unwrap());
        assert!(!c.flag("check").unwrap());
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("dim 6").is_err());
        assert!(ConfigFile::parse("dim = six").unwrap().get::<usize>("dim").is_err());
    }
}
