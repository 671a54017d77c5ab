//! Flat `key = value` config files mirroring the command-line flags.
//!
//! Keys are flag names without the leading dashes (`master-seed` and
//! `master_seed` are equivalent). Blank lines and `#` comments are ignored.
//! Flags given on the command line win over file values.

use std::collections::HashMap;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`", i + 1)))?;
            values.insert(normalize(key), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &str) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading config {path}: {e}")))?;
        Config::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    /// The flag value if present, otherwise the parsed config value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::config(format!("config key {key}: {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| CliError::config(format!("missing required --{key}")))
    }

    /// Comma-separated list from the flag or the config file.
    pub fn list<T: FromStr>(&self, flag: Option<String>, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(text) = flag.or_else(|| self.raw(key).map(str::to_string)) else {
            return Ok(None);
        };
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| CliError::config(format!("--{key} entry {s:?}: {e}"))))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}
