//! Flat `key = value` configuration with `#` comments.
//!
//! Precedence is applied by the caller: defaults, then a config file, then
//! command-line overrides, each through [`Settings::apply`]. A key may appear
//! only once per file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::classify::GradeBands;
use crate::evolution::RunConfig;

use super::DEFAULT_EXCLUDE;

pub const KEYS: [&str; 15] = [
    "population_size",
    "max_generations",
    "tournament_size",
    "target_fitness",
    "max_tree_depth",
    "max_genes",
    "p_crossover",
    "p_mutation",
    "p_reproduction",
    "p_gene_crossover",
    "seed",
    "elitism_count",
    "failure_threshold",
    "response_column",
    "exclude_columns",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot use `{value}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<ConfigError> },
    #[error("{0}")]
    Invalid(String),
}

/// Everything a run needs besides the data itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub run: RunConfig,
    pub failure_threshold: f64,
    pub response_column: String,
    pub exclude_columns: Vec<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            run: RunConfig::default(),
            failure_threshold: GradeBands::default().failure_threshold(),
            response_column: "TOTAL".to_string(),
            exclude_columns: DEFAULT_EXCLUDE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl Settings {
    /// Sets one key. Values are not cross-checked until [`Settings::validate`].
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let run = &mut self.run;
        match key {
            "population_size" => run.population_size = parse(key, value)?,
            "max_generations" => run.max_generations = parse(key, value)?,
            "tournament_size" => run.tournament_size = parse(key, value)?,
            "target_fitness" => run.target_fitness = parse(key, value)?,
            "max_tree_depth" => run.max_tree_depth = parse(key, value)?,
            "max_genes" => run.max_genes = parse(key, value)?,
            "p_crossover" => run.rates.p_crossover = parse(key, value)?,
            "p_mutation" => run.rates.p_mutation = parse(key, value)?,
            "p_reproduction" => run.rates.p_reproduction = parse(key, value)?,
            "p_gene_crossover" => run.rates.p_gene_crossover = parse(key, value)?,
            "seed" => run.seed = parse(key, value)?,
            "elitism_count" => run.elitism_count = parse(key, value)?,
            "failure_threshold" => self.failure_threshold = parse(key, value)?,
            "response_column" => {
                if value.is_empty() {
                    return Err(ConfigError::InvalidValue {
                        key: key.into(),
                        value: value.into(),
                        reason: "empty column name".into(),
                    });
                }
                self.response_column = value.to_string();
            }
            "exclude_columns" => {
                self.exclude_columns = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            self.apply(key, value).map_err(|e| ConfigError::AtLine {
                line,
                source: Box::new(e),
            })?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        s.apply_text(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.run.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.bands()?;
        Ok(())
    }

    pub fn bands(&self) -> Result<GradeBands, ConfigError> {
        GradeBands::default()
            .with_failure_threshold(self.failure_threshold)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Every effective value, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = self.run.echo();
        out.push(("failure_threshold".into(), self.failure_threshold.to_string()));
        out.push(("response_column".into(), self.response_column.clone()));
        out.push(("exclude_columns".into(), self.exclude_columns.join(",")));
        out
    }
}
