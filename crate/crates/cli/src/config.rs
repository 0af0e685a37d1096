//! Scenario configuration files and their validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// The experiments the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FreeGaussian,
    CoherentState,
    TwoSlit,
    KernelConvergence,
    NelsonConvergence,
    AlgebraChecks,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::FreeGaussian,
        Scenario::CoherentState,
        Scenario::TwoSlit,
        Scenario::KernelConvergence,
        Scenario::NelsonConvergence,
        Scenario::AlgebraChecks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FreeGaussian => "free_gaussian",
            Scenario::CoherentState => "coherent_state",
            Scenario::TwoSlit => "two_slit",
            Scenario::KernelConvergence => "kernel_convergence",
            Scenario::NelsonConvergence => "nelson_convergence",
            Scenario::AlgebraChecks => "algebra_checks",
        }
    }

    fn parse(s: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub mass: Option<f64>,
    pub hbar: Option<f64>,
    pub omega: Option<f64>,
    pub sigma0: Option<f64>,
    pub k0: Option<f64>,
    pub x0: Option<f64>,
    /// Initial displacement of the coherent state.
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitSection {
    pub separation: Option<f64>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: Option<f64>,
    /// Alternative to `dt`: total time, with `dt = t_end / n_steps`.
    pub t_end: Option<f64>,
    pub n_steps: Option<usize>,
    /// Snapshot decimation: keep every `stride`-th step.
    pub stride: Option<usize>,
    /// Snapshot spacing for the residual convergence check.
    pub residual_spacing: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub seeds: Option<Vec<f64>>,
    /// Number of seeds placed automatically when `seeds` is absent.
    pub n_seeds: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_paths: Option<usize>,
    pub master_seed: Option<u64>,
    /// Half-width of the conditioning window for velocity probes.
    pub bandwidth: Option<f64>,
    pub probe_time: Option<f64>,
    pub probes: Option<Vec<f64>>,
    /// Ensemble sizes of the mean-path ladder.
    pub ladder: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    /// Conditioning window of the mean-path reconstruction.
    pub path_bandwidth: Option<f64>,
    /// Extra decimation of the trace the ensemble runs on.
    pub decimate: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub slices: Option<Vec<usize>>,
    pub t_span: Option<f64>,
    /// Slice count of the free-kernel comparison.
    pub free_slices: Option<usize>,
    /// Kernel entries with `|x|, |x'|` up to this value are compared.
    pub central_half_width: Option<f64>,
    /// Grid on which a composed kernel is applied to a packet.
    pub apply_half_width: Option<f64>,
    pub apply_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub n: Option<usize>,
    pub length: Option<f64>,
}

/// A scenario file as written by the user; everything is optional so that
/// validation can report every problem at once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub slits: SlitSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub trajectories: TrajectorySection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub algebra: AlgebraSection,
}

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

/// Reads and parses a file. A TOML syntax or schema error is returned as a
/// single diagnostic.
pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let span = e.span();
        let field = match span {
            Some(r) => {
                let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "file".to_string(),
        };
        ConfigError::Invalid(vec![Diagnostic {
            field,
            message: e.message().to_string(),
        }])
    })
}

struct Checker {
    out: Vec<Diagnostic>,
}

impl Checker {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.out.push(Diagnostic {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn required<T>(&mut self, field: &str, v: &Option<T>) {
        if v.is_none() {
            self.push(field, "required for this scenario");
        }
    }

    fn positive(&mut self, field: &str, v: Option<f64>) {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                self.push(field, format!("must be > 0 (got {v})"));
            }
        }
    }

    fn finite(&mut self, field: &str, v: Option<f64>) {
        if let Some(v) = v {
            if !v.is_finite() {
                self.push(field, format!("must be finite (got {v})"));
            }
        }
    }

    fn at_least(&mut self, field: &str, v: Option<usize>, min: usize) {
        if let Some(v) = v {
            if v < min {
                self.push(field, format!("must be >= {min} (got {v})"));
            }
        }
    }
}

impl ScenarioConfig {
    pub fn scenario_kind(&self) -> Option<Scenario> {
        self.scenario.as_deref().and_then(Scenario::parse)
    }

    /// Every violation in the file; empty when it can be run.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut c = Checker { out: Vec::new() };
        let scenario = match self.scenario.as_deref() {
            None => {
                c.push("scenario", "required");
                None
            }
            Some(s) => match Scenario::parse(s) {
                Some(sc) => Some(sc),
                None => {
                    let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                    c.push("scenario", format!("unknown scenario '{s}', expected one of {}", names.join(", ")));
                    None
                }
            },
        };

        let p = &self.physics;
        c.positive("physics.mass", p.mass);
        c.positive("physics.hbar", p.hbar);
        c.positive("physics.omega", p.omega);
        c.positive("physics.sigma0", p.sigma0);
        c.finite("physics.k0", p.k0);
        c.finite("physics.x0", p.x0);
        c.finite("physics.amplitude", p.amplitude);
        c.positive("slits.separation", self.slits.separation);
        c.positive("slits.width", self.slits.width);
        self.check_grid(&mut c);
        self.check_time(&mut c);
        if let Some(seeds) = &self.trajectories.seeds {
            if seeds.is_empty() {
                c.push("trajectories.seeds", "must not be empty");
            }
            if seeds.iter().any(|s| !s.is_finite()) {
                c.push("trajectories.seeds", "must be finite");
            }
        }
        c.at_least("trajectories.n_seeds", self.trajectories.n_seeds, 1);
        self.check_ensemble(&mut c);
        self.check_kernel(&mut c);
        if let Some(n) = self.algebra.n {
            if n < 8 || !n.is_power_of_two() {
                c.push("algebra.n", format!("must be a power of two >= 8 (got {n})"));
            }
        }
        c.positive("algebra.length", self.algebra.length);

        let Some(scenario) = scenario else {
            return c.out;
        };
        match scenario {
            Scenario::FreeGaussian => {
                self.require_grid(&mut c);
                self.require_time(&mut c);
                c.required("physics.sigma0", &p.sigma0);
                self.require_ensemble_if_present(&mut c);
            }
            Scenario::CoherentState => {
                self.require_grid(&mut c);
                self.require_time(&mut c);
                c.required("physics.omega", &p.omega);
                self.require_ensemble_if_present(&mut c);
            }
            Scenario::TwoSlit => {
                self.require_grid(&mut c);
                self.require_time(&mut c);
                c.required("slits.separation", &self.slits.separation);
                c.required("slits.width", &self.slits.width);
            }
            Scenario::KernelConvergence => {
                self.require_grid(&mut c);
                c.required("physics.omega", &p.omega);
                c.required("kernel.slices", &self.kernel.slices);
                c.required("kernel.t_span", &self.kernel.t_span);
            }
            Scenario::NelsonConvergence => {
                self.require_grid(&mut c);
                self.require_time(&mut c);
                c.required("physics.sigma0", &p.sigma0);
                c.required("ensemble.n_paths", &self.ensemble.n_paths);
                c.required("ensemble.master_seed", &self.ensemble.master_seed);
                c.required("ensemble.bandwidth", &self.ensemble.bandwidth);
                c.required("ensemble.ladder", &self.ensemble.ladder);
                c.required("ensemble.path_bandwidth", &self.ensemble.path_bandwidth);
                c.required("trajectories.seeds", &self.trajectories.seeds);
            }
            Scenario::AlgebraChecks => {}
        }
        c.out
    }

    fn check_grid(&self, c: &mut Checker) {
        let g = &self.grid;
        c.finite("grid.x_min", g.x_min);
        c.finite("grid.x_max", g.x_max);
        if let (Some(a), Some(b)) = (g.x_min, g.x_max) {
            if b <= a {
                c.push("grid.x_max", format!("must exceed grid.x_min ({b} <= {a})"));
            }
        }
        if let Some(n) = g.n {
            if n < 8 || !n.is_power_of_two() {
                c.push("grid.n", format!("must be a power of two >= 8 (got {n})"));
            }
        }
    }

    fn check_time(&self, c: &mut Checker) {
        let t = &self.time;
        c.positive("time.dt", t.dt);
        c.positive("time.t_end", t.t_end);
        c.positive("time.residual_spacing", t.residual_spacing);
        if t.dt.is_some() && t.t_end.is_some() {
            c.push("time.t_end", "give either time.dt or time.t_end, not both");
        }
        c.at_least("time.n_steps", t.n_steps, 1);
        c.at_least("time.stride", t.stride, 1);
        if let (Some(n), Some(s)) = (t.n_steps, t.stride) {
            if s > 0 && n % s != 0 {
                c.push("time.stride", format!("must divide time.n_steps ({n} % {s} != 0)"));
            }
        }
        if let (Some(h), Some(dt)) = (t.residual_spacing, self.dt()) {
            let k = h / (2.0 * dt);
            if h > 0.0 && dt > 0.0 && (k.round() < 1.0 || (k - k.round()).abs() > 1e-6) {
                c.push(
                    "time.residual_spacing",
                    format!("must be an even multiple of the step {dt} (got {h})"),
                );
            }
        }
    }

    fn check_ensemble(&self, c: &mut Checker) {
        let e = &self.ensemble;
        c.at_least("ensemble.n_paths", e.n_paths, 1);
        c.positive("ensemble.bandwidth", e.bandwidth);
        c.positive("ensemble.path_bandwidth", e.path_bandwidth);
        c.positive("ensemble.probe_time", e.probe_time);
        c.at_least("ensemble.replicates", e.replicates, 1);
        c.at_least("ensemble.decimate", e.decimate, 1);
        if let Some(p) = &e.probes {
            if p.iter().any(|q| !q.is_finite()) {
                c.push("ensemble.probes", "must be finite");
            }
        }
        if let Some(l) = &e.ladder {
            if l.len() < 2 {
                c.push("ensemble.ladder", "needs at least two ensemble sizes");
            }
            if l.contains(&0) {
                c.push("ensemble.ladder", "sizes must be positive");
            }
            if l.windows(2).any(|w| w[1] <= w[0]) {
                c.push("ensemble.ladder", "sizes must be strictly increasing");
            }
        }
    }

    fn check_kernel(&self, c: &mut Checker) {
        let k = &self.kernel;
        if let Some(s) = &k.slices {
            if s.is_empty() {
                c.push("kernel.slices", "must not be empty");
            }
            if s.contains(&0) {
                c.push("kernel.slices", "slice counts must be positive");
            }
            if s.windows(2).any(|w| w[1] <= w[0]) {
                c.push("kernel.slices", "slice counts must be strictly increasing");
            }
        }
        c.positive("kernel.t_span", k.t_span);
        c.at_least("kernel.free_slices", k.free_slices, 1);
        c.positive("kernel.central_half_width", k.central_half_width);
        c.positive("kernel.apply_half_width", k.apply_half_width);
        if let Some(n) = k.apply_n {
            if n < 8 || !n.is_power_of_two() {
                c.push("kernel.apply_n", format!("must be a power of two >= 8 (got {n})"));
            }
        }
    }

    fn require_grid(&self, c: &mut Checker) {
        c.required("grid.x_min", &self.grid.x_min);
        c.required("grid.x_max", &self.grid.x_max);
        c.required("grid.n", &self.grid.n);
    }

    fn require_time(&self, c: &mut Checker) {
        if self.time.dt.is_none() && self.time.t_end.is_none() {
            c.push("time.dt", "required for this scenario (or give time.t_end)");
        }
        c.required("time.n_steps", &self.time.n_steps);
    }

    fn require_ensemble_if_present(&self, c: &mut Checker) {
        if self.ensemble.n_paths.is_some() {
            c.required("ensemble.master_seed", &self.ensemble.master_seed);
        }
    }

    /// Solver step, from `dt` or `t_end / n_steps`.
    pub fn dt(&self) -> Option<f64> {
        self.time
            .dt
            .or_else(|| Some(self.time.t_end? / self.time.n_steps? as f64))
    }

    pub fn stride(&self) -> usize {
        self.time.stride.unwrap_or(10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE: &str = r#"
scenario = "free_gaussian"
[grid]
x_min = -30.0
x_max = 30.0
n = 1024
[physics]
sigma0 = 1.0
[time]
dt = 1e-3
n_steps = 1000
"#;

    fn fields(d: &[Diagnostic]) -> Vec<&str> {
        d.iter().map(|d| d.field.as_str()).collect()
    }

    #[test]
    fn valid_file_has_no_diagnostics() {
        let cfg = parse(FREE).unwrap();
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        assert_eq!(cfg.scenario_kind(), Some(Scenario::FreeGaussian));
        assert_eq!(cfg.stride(), 10);
    }

    #[test]
    fn missing_dt_names_the_field() {
        let cfg = parse(&FREE.replace("dt = 1e-3", "")).unwrap();
        assert_eq!(fields(&cfg.validate()), ["time.dt"]);
    }

    #[test]
    fn negative_width_reports_the_constraint() {
        let cfg = parse(&FREE.replace("sigma0 = 1.0", "sigma0 = -1.0")).unwrap();
        let d = cfg.validate();
        assert_eq!(fields(&d), ["physics.sigma0"]);
        assert!(d[0].message.contains("> 0"));
    }

    #[test]
    fn all_violations_are_listed() {
        let text = FREE
            .replace("n = 1024", "n = 1000")
            .replace("sigma0 = 1.0", "sigma0 = 0.0")
            .replace("n_steps = 1000", "n_steps = 1000\nstride = 7");
        let d = parse(&text).unwrap().validate();
        assert_eq!(fields(&d), ["physics.sigma0", "grid.n", "time.stride"]);
    }

    #[test]
    fn unknown_keys_and_scenarios_are_rejected() {
        let err = parse(&FREE.replace("sigma0", "sigma")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(ref d) if d[0].message.contains("sigma")));
        let d = parse(&FREE.replace("free_gaussian", "double_slit")).unwrap().validate();
        assert_eq!(fields(&d), ["scenario"]);
    }

    #[test]
    fn scenario_specific_requirements() {
        let d = parse("scenario = \"kernel_convergence\"").unwrap().validate();
        assert_eq!(
            fields(&d),
            ["grid.x_min", "grid.x_max", "grid.n", "physics.omega", "kernel.slices", "kernel.t_span"]
        );
        assert!(parse("scenario = \"algebra_checks\"").unwrap().validate().is_empty());
    }

    #[test]
    fn step_from_total_time() {
        let cfg = parse(&FREE.replace("dt = 1e-3", "t_end = 2.0")).unwrap();
        assert!(cfg.validate().is_empty());
        assert_eq!(cfg.dt(), Some(2e-3));
        let both = parse(&FREE.replace("dt = 1e-3", "dt = 1e-3\nt_end = 2.0")).unwrap();
        assert_eq!(fields(&both.validate()), ["time.t_end"]);
    }
}
