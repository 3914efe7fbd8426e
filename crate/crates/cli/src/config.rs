//! Flat `key = value` run files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed run file. Blank lines and `#` comments are ignored; keys may not
/// repeat.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ConfigFile, CliError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{line}: expected `key = value`, found `{content}`",
                path.display()
            )));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(CliError::Usage(format!(
                "{}:{line}: empty key or value in `{content}`",
                path.display()
            )));
        }
        if let Some(prev) = entries.get(&key) {
            let prev: &Entry = prev;
            return Err(CliError::Usage(format!(
                "{}:{line}: key `{key}` already set on line {}",
                path.display(),
                prev.line
            )));
        }
        entries.insert(
            key,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(ConfigFile {
        path: path.to_path_buf(),
        entries,
    })
}

/// Merges command-line flags over a run file over defaults, remembering which
/// file keys were consumed.
pub struct Resolver {
    file: ConfigFile,
    used: Vec<String>,
}

impl Resolver {
    pub fn new(file: Option<ConfigFile>) -> Self {
        Self {
            file: file.unwrap_or_default(),
            used: Vec::new(),
        }
    }

    fn file_value<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        self.used.push(key.to_string());
        let Some(entry) = self.file.entries.get(key) else {
            return Ok(None);
        };
        parse(&entry.value).map(Some).map_err(|e| {
            CliError::Usage(format!(
                "{}:{}: invalid value `{}` for `{key}`: {e}",
                self.file.path.display(),
                entry.line,
                entry.value
            ))
        })
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.file_value(key, |s| s.parse::<T>().map_err(|e| e.to_string()))?;
        Ok(flag.or(file).unwrap_or(default))
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.file_value(key, |s| s.parse::<T>().map_err(|e| e.to_string()))?;
        Ok(flag.or(file))
    }

    /// Comma-separated list.
    pub fn list<T>(
        &mut self,
        key: &str,
        flag: Option<Vec<T>>,
        default: Vec<T>,
    ) -> Result<Vec<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.file_value(key, |s| {
            s.split(',')
                .map(|item| item.trim().parse::<T>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<T>, String>>()
        })?;
        Ok(flag.or(file).unwrap_or(default))
    }

    /// Like [`Resolver::value`] for clap value enums.
    pub fn choice<T: clap::ValueEnum>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        let file = self.file_value(key, |s| T::from_str(s, true))?;
        Ok(flag.or(file).unwrap_or(default))
    }

    pub fn choices<T: clap::ValueEnum>(
        &mut self,
        key: &str,
        flag: Option<Vec<T>>,
        default: Vec<T>,
    ) -> Result<Vec<T>, CliError> {
        let file = self.file_value(key, |s| {
            s.split(',')
                .map(|item| T::from_str(item.trim(), true))
                .collect::<Result<Vec<T>, String>>()
        })?;
        Ok(flag.or(file).unwrap_or(default))
    }

    /// Fails on the first file key that no option asked for.
    pub fn finish(self, subcommand: &str) -> Result<(), CliError> {
        for (key, entry) in &self.file.entries {
            if !self.used.iter().any(|k| k == key) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown key `{key}` for `{subcommand}`",
                    self.file.path.display(),
                    entry.line
                )));
            }
        }
        Ok(())
    }
}
