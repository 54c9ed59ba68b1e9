//! Verification reports and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    pub value: f64,
    /// Absent for plain metrics.
    pub comparison: Option<Comparison>,
    pub tolerance: Option<f64>,
    /// Reported-only records never affect the exit status.
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub cli: String,
    pub core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub command: String,
    pub versions: Versions,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            versions: Versions {
                cli: env!("CARGO_PKG_VERSION").into(),
                core: qjc_core::VERSION.into(),
            },
            config: config.clone(),
            checks: Vec::new(),
            passed: true,
        }
    }

    fn push(&mut self, suite: &str, name: &str, value: f64, bound: Option<(Comparison, f64)>, asserted: bool) {
        let pass = match bound {
            Some((Comparison::AtMost, t)) => value <= t,
            Some((Comparison::AtLeast, t)) => value >= t,
            Some((Comparison::Equal, t)) => value == t,
            None => true,
        };
        if asserted && !pass {
            self.passed = false;
        }
        self.checks.push(CheckRecord {
            suite: suite.into(),
            name: name.into(),
            value,
            comparison: bound.map(|b| b.0),
            tolerance: bound.map(|b| b.1),
            asserted,
            pass,
        });
    }

    pub fn at_most(&mut self, suite: &str, name: &str, value: f64, tol: f64) {
        self.push(suite, name, value, Some((Comparison::AtMost, tol)), true);
    }

    pub fn at_least(&mut self, suite: &str, name: &str, value: f64, tol: f64) {
        self.push(suite, name, value, Some((Comparison::AtLeast, tol)), true);
    }

    pub fn equal(&mut self, suite: &str, name: &str, value: f64, want: f64) {
        self.push(suite, name, value, Some((Comparison::Equal, want)), true);
    }

    /// Records a metric with a nominal bound that is not asserted.
    pub fn reported(&mut self, suite: &str, name: &str, value: f64, tol: f64) {
        self.push(suite, name, value, Some((Comparison::AtMost, tol)), false);
    }

    /// Records a value with no bound.
    pub fn metric(&mut self, suite: &str, name: &str, value: f64) {
        self.push(suite, name, value, None, false);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        to_json(self)
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = match (c.asserted, c.pass) {
                (true, true) => "PASS",
                (true, false) => "FAIL",
                (false, _) => "INFO",
            };
            let bound = match (c.comparison, c.tolerance) {
                (Some(Comparison::AtMost), Some(t)) => format!(" <= {t:e}"),
                (Some(Comparison::AtLeast), Some(t)) => format!(" >= {t:e}"),
                (Some(Comparison::Equal), Some(t)) => format!(" == {t:e}"),
                _ => String::new(),
            };
            s.push_str(&format!("{status} {}/{}: {:e}{bound}\n", c.suite, c.name, c.value));
        }
        s.push_str(if self.passed {
            "overall: PASS\n"
        } else {
            "overall: FAIL\n"
        });
        s
    }
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions and floats use the shortest round-trip form.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failure leaves any previous file untouched.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Io("output path is empty".into()));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Io(format!("cannot create a temporary file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::Io(format!("write failed: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot move output to {}: {}", path.display(), e.error)))?;
    Ok(())
}
