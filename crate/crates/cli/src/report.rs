//! Pass/fail checks and the JSON run report.

use serde::Serialize;

use crate::config::ScenarioConfig;

/// Acceptance band for a measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tolerance {
    /// `measured < value`
    Below { value: f64 },
    /// `measured <= value`
    AtMost { value: f64 },
    /// `measured >= value`
    AtLeast { value: f64 },
    /// `lo <= measured <= hi`
    Range { lo: f64, hi: f64 },
}

impl Tolerance {
    pub fn accepts(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match *self {
            Tolerance::Below { value } => v < value,
            Tolerance::AtMost { value } => v <= value,
            Tolerance::AtLeast { value } => v >= value,
            Tolerance::Range { lo, hi } => lo <= v && v <= hi,
        }
    }
}

/// Where the reference value of a check comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Closed-form solution or formula.
    Analytic,
    /// Independent numerical route (finite differences, a second method).
    CrossCheck,
    /// Symmetry, conservation law or identity of the scheme.
    Invariant,
    /// Convergence rate measured under refinement.
    Convergence,
    /// Statistical test against a known law.
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: Tolerance,
    pub oracle: Oracle,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, tolerance: Tolerance, oracle: Oracle) -> Self {
        Check {
            name: name.into(),
            measured,
            passed: tolerance.accepts(measured),
            tolerance,
            oracle,
        }
    }

    pub fn below(name: impl Into<String>, measured: f64, value: f64, oracle: Oracle) -> Self {
        Check::new(name, measured, Tolerance::Below { value }, oracle)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, value: f64, oracle: Oracle) -> Self {
        Check::new(name, measured, Tolerance::AtMost { value }, oracle)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, value: f64, oracle: Oracle) -> Self {
        Check::new(name, measured, Tolerance::AtLeast { value }, oracle)
    }

    pub fn range(name: impl Into<String>, measured: f64, lo: f64, hi: f64, oracle: Oracle) -> Self {
        Check::new(name, measured, Tolerance::Range { lo, hi }, oracle)
    }
}

/// Everything a run produced apart from the data files themselves. Contains
/// no timing or paths, so reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
    pub outputs: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(scenario: String, config: ScenarioConfig) -> Self {
        RunReport {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario,
            config,
            checks: Vec::new(),
            errors: Vec::new(),
            outputs: Vec::new(),
            passed: false,
        }
    }

    pub fn finish(&mut self) {
        self.passed = self.errors.is_empty() && self.checks.iter().all(|c| c.passed);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
