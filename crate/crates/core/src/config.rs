//! Flat `key = value` configuration files.
//!
//! Every configuration type in the crate (plant, chiller COP model, storage,
//! solver options) shares this format: one key per line, `#` starts a
//! comment, blank lines are ignored. Unknown keys are rejected so that a
//! typo never silently falls back to a default.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parsed key/value pairs, consumed key by key.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    entries: Vec<(String, String)>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Removes `key` and parses its value, if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some(pos) = self.entries.iter().position(|(k, _)| k == key) else {
            return Ok(None);
        };
        let (key, value) = self.entries.remove(pos);
        value
            .parse::<T>()
            .map(Some)
            .map_err(|_| ConfigError::Value { key, value })
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().next() {
            Some((key, _)) => Err(ConfigError::Unknown(key)),
            None => Ok(()),
        }
    }
}

/// Incremental writer producing the same format `FlatConfig` reads.
#[derive(Debug, Default)]
pub struct ConfigWriter {
    out: String,
}

impl ConfigWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        for line in text.lines() {
            self.out.push_str("# ");
            self.out.push_str(line);
            self.out.push('\n');
        }
        self
    }

    pub fn entry(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.out.push_str(&format!("{key} = {value}\n"));
        self
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

/// Types that round-trip through the flat config format.
pub trait ConfigFile: Sized {
    fn from_flat(cfg: &mut FlatConfig) -> Result<Self, ConfigError>;
    fn write_flat(&self, w: &mut ConfigWriter);

    fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = FlatConfig::parse(text)?;
        let value = Self::from_flat(&mut cfg)?;
        cfg.finish()?;
        Ok(value)
    }

    fn to_config_string(&self) -> String {
        let mut w = ConfigWriter::new();
        self.write_flat(&mut w);
        w.finish()
    }

    fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    fn save(&self, path: &Path) -> Result<(), ConfigError> {
        fs::write(path, self.to_config_string()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let mut cfg = FlatConfig::parse("# header\n a = 1.5 # trailing\n\nb=2\n").unwrap();
        assert_eq!(cfg.take::<f64>("a").unwrap(), Some(1.5));
        assert_eq!(cfg.take::<u32>("b").unwrap(), Some(2));
        assert_eq!(cfg.take::<f64>("c").unwrap(), None);
        cfg.finish().unwrap();
    }

    #[test]
    fn rejects_unknown_duplicate_and_garbage() {
        let cfg = FlatConfig::parse("zzz = 1").unwrap();
        assert!(matches!(cfg.finish(), Err(ConfigError::Unknown(k)) if k == "zzz"));
        assert!(matches!(
            FlatConfig::parse("a = 1\na = 2"),
            Err(ConfigError::Duplicate(_))
        ));
        assert!(matches!(
            FlatConfig::parse("a 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        let mut cfg = FlatConfig::parse("a = x").unwrap();
        assert!(matches!(cfg.take::<f64>("a"), Err(ConfigError::Value { .. })));
    }
}
