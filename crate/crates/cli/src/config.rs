//! Config file loading and flag overrides.
//!
//! A TOML file may carry top-level `format` / `output` keys and one section
//! per subcommand (`[anomaly]`, `[lattice-z]`, ...). Flags given on the
//! command line replace file values key by key.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Error classes that map onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config, or parameters (exit 2).
    Config(String),
    /// Non-convergence or a failed validation (exit 3).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Failure(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<cspath::Error> for CliError {
    fn from(e: cspath::Error) -> Self {
        use cspath::Error as E;
        match e {
            E::NoConvergence(_) | E::Numerical(_) => CliError::Failure(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    root: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        Ok(Self { root })
    }

    pub fn top_str(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.root.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(CliError::Config(format!("'{key}' must be a string, got {other}"))),
        }
    }

    fn section(&self, name: &str) -> Result<toml::Table, CliError> {
        match self.root.get(name) {
            None => Ok(toml::Table::new()),
            Some(toml::Value::Table(t)) => Ok(t.clone()),
            Some(_) => Err(CliError::Config(format!("'{name}' must be a section"))),
        }
    }
}

/// Merge the file section for `section` with the flags in `args` and deserialize.
pub fn resolve<A: Serialize, P: DeserializeOwned>(
    file: Option<&ConfigFile>,
    section: &str,
    args: &A,
) -> Result<P, CliError> {
    let mut merged = match file {
        Some(f) => f.section(section)?,
        None => toml::Table::new(),
    };
    let flags = toml::Table::try_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    merged.extend(flags);
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("[{section}] {}", e.message())))
}
