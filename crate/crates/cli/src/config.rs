//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names (`t-end`, `picard-tol`, ...). A flag given
//! on the command line wins over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    origin: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}:{}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Config(format!("{origin}:{}: empty key", idx + 1)));
            }
            if entries
                .insert(key.clone(), (value.trim().to_string(), idx + 1))
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "{origin}:{}: `{key}` given twice",
                    idx + 1
                )));
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
        })
    }

    /// Rejects keys the current subcommand does not know.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), CliError> {
        for (key, (_, line)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "{}:{line}: unknown key `{key}` (expected one of: {})",
                    self.origin,
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((raw, line)) => raw.parse().map(Some).map_err(|_| {
                CliError::Config(format!(
                    "{}:{line}: `{key}`: cannot parse `{raw}`",
                    self.origin
                ))
            }),
        }
    }

    /// Flag value, else file value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup(key),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.pick(flag, key)?.ok_or_else(|| {
            CliError::Config(format!(
                "missing required value `--{key}` (give the flag or set `{key} = ...` in a config file)"
            ))
        })
    }
}

/// Comma-separated list, e.g. `51,101,201`.
pub fn parse_list<T: FromStr>(raw: &str, key: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{}`", s.trim())))
        })
        .collect()
}
