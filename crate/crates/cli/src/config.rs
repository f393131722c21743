//! Experiment specifications: a TOML file with `[experiment]`, `[solver]` and
//! `[init]` sections, overridden field by field from the command line.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lrsparse::solver::{InitConfig, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    Single,
    Convergence,
    PhaseTransition,
    StatRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    Sensing,
    RpcaFull,
    RpcaPartial,
}

/// How sweep grid values are read: as sample sizes (or rates) directly, or
/// as multiples of `r·max(d1, d2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GridScale {
    Absolute,
    Rd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub model: ModelKind,
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    /// Row/column corruption fraction of the planted sparse part.
    pub beta: f64,
    /// Sparsity budget handed to the solver; defaults to the planted count.
    pub s_count: Option<usize>,
    /// Corruption values are uniform on `[-amplitude, amplitude]`; defaults to `rank`.
    pub amplitude: Option<f64>,
    /// Measurements `n` (sensing) or observation rate `p` (partial RPCA) for
    /// single runs.
    pub samples: Option<f64>,
    /// Sweep values of `n` or `p`.
    pub grid: Vec<f64>,
    pub grid_scale: GridScale,
    pub trials: usize,
    pub noise: f64,
    pub seed: u64,
    pub threads: usize,
    /// Observed matrix file for RPCA on user data instead of a planted instance.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Record per-iteration wall-clock time in traces.
    pub timing: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Single,
            model: ModelKind::RpcaFull,
            d1: 100,
            d2: 100,
            rank: 5,
            beta: 0.05,
            s_count: None,
            amplitude: None,
            samples: None,
            grid: Vec::new(),
            grid_scale: GridScale::Absolute,
            trials: 1,
            noise: 0.0,
            seed: DEFAULT_SEED,
            threads: 1,
            input: None,
            output: None,
            timing: false,
        }
    }
}

/// Overrides of [`SolverConfig`] defaults. `alpha` defaults to the measured
/// incoherence of the instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_prime: Option<f64>,
    pub eta_coeff: Option<f64>,
    pub tau: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub lambda: Option<f64>,
    pub lambda_prime: Option<f64>,
    pub eta_prime: Option<f64>,
    pub tau_prime: Option<f64>,
    pub iters: Option<usize>,
    pub zeta_coeff: Option<f64>,
    pub kappa_hint: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    pub solver: SolverSection,
    pub init: InitSection,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Resolved spec as one line of JSON, embedded in every CSV written.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn amplitude(&self) -> f64 {
        self.experiment.amplitude.unwrap_or(self.experiment.rank as f64)
    }

    /// Sweep values after applying the grid scale.
    pub fn grid_values(&self) -> Vec<f64> {
        let e = &self.experiment;
        let unit = match e.grid_scale {
            GridScale::Absolute => 1.0,
            GridScale::Rd => (e.rank * e.d1.max(e.d2)) as f64,
        };
        e.grid.iter().map(|g| g * unit).collect()
    }

    /// Solver settings for an instance with the given planted quantities.
    pub fn solver_config(&self, s_count: usize, alpha: f64) -> Result<SolverConfig> {
        let e = &self.experiment;
        let o = &self.solver;
        let mut cfg = SolverConfig::new(
            e.rank,
            e.s_count.unwrap_or(s_count),
            e.beta,
            o.alpha.unwrap_or(alpha.max(1.0)),
        );
        if let Some(v) = o.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = o.gamma_prime {
            cfg.gamma_prime = v;
        }
        if let Some(v) = o.eta_coeff {
            cfg.eta_coeff = v;
        }
        if let Some(v) = o.tau {
            cfg.tau = v;
        }
        if let Some(v) = o.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = o.tol {
            cfg.tol = v;
        }
        cfg.record_timing = e.timing;
        cfg.validate().map_err(|err| prefixed("solver", err))?;
        Ok(cfg)
    }

    pub fn init_config(&self) -> Result<InitConfig> {
        let o = &self.init;
        let mut cfg = InitConfig::default();
        if let Some(v) = o.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = o.lambda_prime {
            cfg.lambda_prime = v;
        }
        if let Some(v) = o.eta_prime {
            cfg.eta_prime = v;
        }
        if let Some(v) = o.tau_prime {
            cfg.tau_prime = v;
        }
        if let Some(v) = o.iters {
            cfg.iters = v;
        }
        if let Some(v) = o.zeta_coeff {
            cfg.zeta_coeff = v;
        }
        cfg.kappa_hint = o.kappa_hint;
        cfg.validate().map_err(|err| prefixed("init", err))?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before an instance exists.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.d1 == 0 {
            return Err(CliError::config("experiment.d1", "must be positive"));
        }
        if e.d2 == 0 {
            return Err(CliError::config("experiment.d2", "must be positive"));
        }
        if e.rank == 0 || e.rank > e.d1.min(e.d2) {
            return Err(CliError::config(
                "experiment.rank",
                format!("must lie in 1..={}, got {}", e.d1.min(e.d2), e.rank),
            ));
        }
        if !(e.beta > 0.0 && e.beta < 1.0) {
            return Err(CliError::config(
                "experiment.beta",
                format!("must lie in (0, 1), got {}", e.beta),
            ));
        }
        if let Some(a) = e.amplitude {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::config(
                    "experiment.amplitude",
                    format!("must be positive and finite, got {a}"),
                ));
            }
        }
        if e.trials == 0 {
            return Err(CliError::config("experiment.trials", "must be at least 1"));
        }
        if e.threads == 0 {
            return Err(CliError::config("experiment.threads", "must be at least 1"));
        }
        if !(e.noise >= 0.0 && e.noise.is_finite()) {
            return Err(CliError::config(
                "experiment.noise",
                format!("must be finite and nonnegative, got {}", e.noise),
            ));
        }
        let sweep = matches!(e.kind, ExperimentKind::PhaseTransition | ExperimentKind::StatRate);
        if sweep && e.grid.is_empty() {
            return Err(CliError::config("experiment.grid", "sweeps need a nonempty grid"));
        }
        if sweep && e.model == ModelKind::RpcaFull {
            return Err(CliError::config(
                "experiment.model",
                "sweeps vary n or p; use sensing or rpca_partial",
            ));
        }
        if sweep && e.input.is_some() {
            return Err(CliError::config("experiment.input", "sweeps run on planted instances only"));
        }
        if e.input.is_some() && e.model != ModelKind::RpcaFull {
            return Err(CliError::config("experiment.input", "user matrices are solved as rpca_full"));
        }
        for &v in &self.grid_values() {
            self.check_samples("experiment.grid", v)?;
        }
        if let Some(v) = e.samples {
            self.check_samples("experiment.samples", v)?;
        } else if !sweep && e.input.is_none() && e.model != ModelKind::RpcaFull {
            return Err(CliError::config(
                "experiment.samples",
                "required for sensing (n) and rpca_partial (p)",
            ));
        }
        self.solver_config(e.s_count.unwrap_or(1), self.solver.alpha.unwrap_or(1.0))?;
        self.init_config()?;
        Ok(())
    }

    fn check_samples(&self, field: &str, v: f64) -> Result<()> {
        match self.experiment.model {
            ModelKind::Sensing => {
                if !(v >= 0.0 && v.is_finite() && v.fract() == 0.0) {
                    return Err(CliError::config(field, format!("n must be a nonnegative integer, got {v}")));
                }
            }
            ModelKind::RpcaPartial | ModelKind::RpcaFull => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::config(field, format!("p must lie in [0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }
}

fn prefixed(section: &str, err: lrsparse::Error) -> CliError {
    match err {
        lrsparse::Error::Parameter { name, reason } => CliError::config(&format!("{section}.{name}"), reason),
        other => CliError::Config(format!("{section}: {other}")),
    }
}
