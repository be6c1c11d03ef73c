//! Flat key-value configuration files and flag/file/default resolution.
//!
//! A config file holds one `key = value` pair per line (`#` starts a
//! comment); keys match the CLI flag names with dashes replaced by
//! underscores. Flags override file values.

use hypertorus_core::IntegrationControls;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration: exit code 2.
    Usage(String),
    /// A solver or verification stage failed: exit code 1.
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn failure(msg: impl Into<String>) -> CliError {
    CliError::Failure(msg.into())
}

/// Parsed config file contents.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| usage(format!("config key `{key}`: cannot parse `{raw}`"))),
        }
    }
}

/// flag > file > default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// flag > file, required.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| usage(format!("missing required value `{name}` (flag or config file)")))
}

/// Integration-control overrides shared by every subcommand.
#[derive(Debug, Clone, Copy, Default, clap::Args)]
pub struct ControlArgs {
    /// Relative tolerance of the integrator
    #[arg(long, allow_negative_numbers = false)]
    pub rel_tol: Option<f64>,
    /// Absolute tolerance of the integrator
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Arclength budget
    #[arg(long)]
    pub max_arclength: Option<f64>,
    /// Theta floor of the collapse guard
    #[arg(long)]
    pub theta_floor: Option<f64>,
    /// Event refinement tolerance in s
    #[arg(long)]
    pub event_tol: Option<f64>,
    /// Step budget
    #[arg(long)]
    pub max_steps: Option<usize>,
}

impl ControlArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<IntegrationControls, CliError> {
        let d = IntegrationControls::default();
        let controls = IntegrationControls {
            rel_tol: pick(self.rel_tol, file.get("rel_tol")?, d.rel_tol),
            abs_tol: pick(self.abs_tol, file.get("abs_tol")?, d.abs_tol),
            max_arclength: pick(self.max_arclength, file.get("max_arclength")?, d.max_arclength),
            theta_floor: pick(self.theta_floor, file.get("theta_floor")?, d.theta_floor),
            event_tol: pick(self.event_tol, file.get("event_tol")?, d.event_tol),
            max_steps: pick(self.max_steps, file.get("max_steps")?, d.max_steps),
            ..d
        };
        controls
            .validate()
            .map_err(|e| usage(format!("invalid integration controls: {e}")))?;
        Ok(controls)
    }

    pub fn describe(&self, file: &FileConfig) -> Result<String, CliError> {
        let c = self.resolve(file)?;
        let mut s = String::new();
        let _ = write!(
            s,
            "rel_tol={:?} abs_tol={:?} max_arclength={:?} theta_floor={:?} event_tol={:?} max_steps={}",
            c.rel_tol, c.abs_tol, c.max_arclength, c.theta_floor, c.event_tol, c.max_steps
        );
        Ok(s)
    }
}

/// FNV-1a, used to derive deterministic run directory names from the
/// resolved configuration (no wall clock involved).
pub fn fnv1a64(data: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in data.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64("a"), 0xaf63dc4c8601ec8c);
        assert_ne!(fnv1a64("solve n=2"), fnv1a64("solve n=3"));
    }

    #[test]
    fn pick_precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<i32>(None, None, 3), 3);
    }
}
