//! Batch runner for bohmlab scenarios: reads a TOML scenario, runs it, and
//! writes CSV tables plus a JSON report of pass/fail checks.

use std::path::{Path, PathBuf};

use anyhow::Context;

pub mod config;
pub mod output;
pub mod report;
pub mod scenarios;

pub use config::{ConfigError, Diagnostic, Scenario, ScenarioConfig};
pub use report::{Check, RunReport, Tolerance};

/// Name of the report file in the output directory.
pub const REPORT_FILE: &str = "report.json";

/// Command-line overrides of a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Io(anyhow::Error),
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 1,
        }
    }
}

/// The configuration with command-line overrides applied.
pub fn apply_overrides(mut cfg: ScenarioConfig, options: &RunOptions) -> ScenarioConfig {
    if let Some(seed) = options.seed_override {
        cfg.ensemble.master_seed = Some(seed);
    }
    if let Some(dir) = &options.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    cfg
}

fn default_output_dir(scenario: Scenario) -> PathBuf {
    Path::new("bohmlab-out").join(scenario.name())
}

/// Runs a validated scenario and writes its tables and report. Check
/// failures and module errors end up in the report, not in the `Err` arm.
pub fn run(cfg: ScenarioConfig, options: &RunOptions) -> Result<RunOutcome, RunError> {
    let cfg = apply_overrides(cfg, options);
    let diagnostics = cfg.validate();
    if !diagnostics.is_empty() {
        return Err(ConfigError::Invalid(diagnostics).into());
    }
    let scenario = cfg.scenario_kind().expect("validated scenario");
    let dir = cfg.output_dir.clone().unwrap_or_else(|| default_output_dir(scenario));
    let mut sink = output::Sink::new(&dir).map_err(RunError::Io)?;

    // The echo leaves out where the files went, so reports from different
    // output directories compare equal.
    let mut echo = cfg.clone();
    echo.output_dir = None;
    let mut report = RunReport::new(scenario.name().to_string(), echo);
    if let Err(e) = scenarios::run(scenario, &cfg, &mut sink, &mut report.checks) {
        report.errors.push(format!("{e:#}"));
    }
    report.outputs = sink.files().to_vec();
    report.outputs.push(REPORT_FILE.to_string());
    report.finish();
    std::fs::write(dir.join(REPORT_FILE), report.to_json())
        .with_context(|| format!("writing {}", dir.join(REPORT_FILE).display()))
        .map_err(RunError::Io)?;
    Ok(RunOutcome {
        report,
        output_dir: dir,
    })
}

/// Loads a file and runs it.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunOutcome, RunError> {
    run(config::load(path)?, options)
}

/// Every problem in a configuration file; empty when it is runnable.
pub fn validate_file(path: &Path) -> Result<Vec<Diagnostic>, ConfigError> {
    match config::load(path) {
        Ok(cfg) => Ok(cfg.validate()),
        Err(ConfigError::Invalid(d)) => Ok(d),
        Err(e) => Err(e),
    }
}
