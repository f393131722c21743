//! Single solves, convergence traces and the two sweeps.

use std::time::Instant;

use lrsparse::metrics::{measure_incoherence, relative_error, rmse};
use lrsparse::models::{ObservationModel, RpcaProblem};
use lrsparse::operators::TruncationParams;
use lrsparse::solver::{solve_observed, GdIterate, RunTrace, Solution};
use lrsparse::synthetic::{derive_seed, gen_rpca, gen_sensing, GroundTruth};

use crate::config::{ExperimentSpec, ModelKind};
use crate::error::{CliError, Result};

/// Relative error at or below which a run counts as exact recovery.
pub const SUCCESS_TOL: f64 = 1e-3;

/// Seed of trial `trial` at sweep point `point`; single runs use point 0.
pub fn instance_seed(master: u64, point: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, point as u64), trial as u64)
}

pub struct Instance {
    pub truth: Option<GroundTruth>,
    pub model: ObservationModel,
}

/// Planted instance; `samples` is `n` for sensing and `p` for partial RPCA.
pub fn plant_instance(spec: &ExperimentSpec, samples: Option<f64>, seed: u64) -> Result<Instance> {
    let e = &spec.experiment;
    let truth = GroundTruth::plant(e.d1, e.d2, e.rank, e.beta, spec.amplitude(), seed)?;
    let obs_seed = derive_seed(seed, 3);
    let model = match e.model {
        ModelKind::Sensing => {
            let n = samples.ok_or_else(|| CliError::config("experiment.samples", "sensing needs n"))?;
            ObservationModel::Sensing(gen_sensing(&truth.x_star, &truth.s_star, n as usize, e.noise, obs_seed)?)
        }
        ModelKind::RpcaFull => ObservationModel::Rpca(gen_rpca(&truth.x_star, &truth.s_star, 1.0, e.noise, obs_seed)?),
        ModelKind::RpcaPartial => {
            let p = samples.ok_or_else(|| CliError::config("experiment.samples", "rpca_partial needs p"))?;
            ObservationModel::Rpca(gen_rpca(&truth.x_star, &truth.s_star, p, e.noise, obs_seed)?)
        }
    };
    Ok(Instance {
        truth: Some(truth),
        model,
    })
}

/// Fully observed RPCA on a user matrix; there is no ground truth.
pub fn load_instance(path: &std::path::Path) -> Result<Instance> {
    let y = crate::io::load_matrix(path)?;
    Ok(Instance {
        truth: None,
        model: ObservationModel::Rpca(RpcaProblem::full(y)),
    })
}

/// Running check of the iterate constraints: row norms within the
/// projection radii, `S` within its sparsity budget and row/column quotas.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintAudit {
    pub iterations: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl ConstraintAudit {
    pub fn check(&mut self, it: &GdIterate<'_>) {
        self.iterations += 1;
        let (d1, d2) = it.s.shape();
        let mut fail = |what: String| {
            self.violations += 1;
            self.first_violation.get_or_insert_with(|| format!("iteration {}: {what}", it.iteration));
        };
        let slack = |bound: f64| bound * (1.0 + 1e-12) + 1e-300;
        let (ru, rv) = (it.u.max_row_norm(), it.v.max_row_norm());
        if ru > slack(it.bounds.u) {
            fail(format!("max row norm of U {ru:e} exceeds {:e}", it.bounds.u));
        }
        if rv > slack(it.bounds.v) {
            fail(format!("max row norm of V {rv:e} exceeds {:e}", it.bounds.v));
        }
        if it.s.nnz() > it.sparse_budget {
            fail(format!("nnz(S) = {} exceeds {}", it.s.nnz(), it.sparse_budget));
        }
        let Ok(params) = TruncationParams::new(it.theta, d1, d2) else {
            fail(format!("invalid truncation level {}", it.theta));
            return;
        };
        if let Some(i) = (0..d1).find(|&i| it.s.row_nnz(i) > params.row_quota()) {
            fail(format!("row {i} of S has {} nonzeros, quota {}", it.s.row_nnz(i), params.row_quota()));
        }
        if let Some(j) = (0..d2).find(|&j| it.s.col_nnz(j) > params.col_quota()) {
            fail(format!("column {j} of S has {} nonzeros, quota {}", it.s.col_nnz(j), params.col_quota()));
        }
    }

    pub fn merge(&mut self, other: &ConstraintAudit) {
        self.iterations += other.iterations;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation.clone_from(&other.first_violation);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub seed: u64,
    pub trace: RunTrace,
    pub rel_err_x: Option<f64>,
    pub rel_err_s: Option<f64>,
    pub rmse: Option<f64>,
    pub gd_iterations: usize,
    pub secs: f64,
    pub audit: ConstraintAudit,
    /// Set when the solver diverged; the error fields are then empty.
    pub failure: Option<String>,
}

impl TrialOutcome {
    pub fn recovered(&self) -> bool {
        self.rel_err_x.is_some_and(|e| e <= SUCCESS_TOL)
    }

    pub fn summary_line(&self) -> String {
        let f = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:e}"));
        let mut line = format!(
            "rel_err_x={} rel_err_s={} rmse={} iters={} secs={:.3}",
            f(self.rel_err_x),
            f(self.rel_err_s),
            f(self.rmse),
            self.gd_iterations,
            self.secs
        );
        if let Some(why) = &self.failure {
            line.push_str(&format!(" failure=\"{why}\""));
        }
        line
    }
}

/// Solves one instance. Divergence is reported in the outcome; any other
/// solver error is returned.
pub fn run_trial(spec: &ExperimentSpec, inst: &Instance, seed: u64) -> Result<(TrialOutcome, Option<Solution>)> {
    let (d1, d2) = inst.model.shape();
    let e = &spec.experiment;
    let (s_count, alpha) = match &inst.truth {
        Some(t) => (t.s_count, t.alpha_actual),
        None => {
            let y = match &inst.model {
                ObservationModel::Rpca(p) => p.observed(),
                ObservationModel::Sensing(_) => unreachable!("loaded instances are RPCA"),
            };
            let budget = (e.beta * (d1 * d2) as f64).floor() as usize;
            let alpha = if spec.solver.alpha.is_some() { 1.0 } else { measure_incoherence(y, e.rank)? };
            (budget, alpha)
        }
    };
    let cfg = spec.solver_config(s_count, alpha)?;
    let icfg = spec.init_config()?;
    let mut audit = ConstraintAudit::default();
    let start = Instant::now();
    let result = solve_observed(&inst.model, &cfg, &icfg, inst.truth.as_ref(), &mut |it| audit.check(it));
    let secs = start.elapsed().as_secs_f64();
    let solution = match result {
        Ok(s) => s,
        Err(err @ lrsparse::Error::Divergence { .. }) => {
            let outcome = TrialOutcome {
                seed,
                trace: RunTrace::new(),
                rel_err_x: None,
                rel_err_s: None,
                rmse: None,
                gd_iterations: 0,
                secs,
                audit,
                failure: Some(err.to_string()),
            };
            return Ok((outcome, None));
        }
        Err(err) => return Err(err.into()),
    };
    let (rel_err_x, rel_err_s, err_rmse) = match &inst.truth {
        Some(t) => {
            let ex = relative_error(&solution.x_hat, &t.x_star)?;
            let es = relative_error(&solution.sparse, &t.s_star)?;
            (Some(ex), Some(es), Some(rmse(&solution.x_hat, &t.x_star)?))
        }
        None => (None, None, None),
    };
    let outcome = TrialOutcome {
        seed,
        trace: solution.trace.clone(),
        rel_err_x,
        rel_err_s,
        rmse: err_rmse,
        gd_iterations: solution.trace.gd_iterations(),
        secs,
        audit,
        failure: None,
    };
    Ok((outcome, Some(solution)))
}

/// Runs `count` independent jobs, on a dedicated pool when `threads > 1`.
/// Results come back in job order either way.
pub fn map_trials<T, F>(threads: usize, count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if threads <= 1 {
        return (0..count).map(job).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config("experiment.threads", e))?;
    pool.install(|| (0..count).into_par_iter().map(job).collect())
}

/// One instance (planted, or loaded from `experiment.input`) solved once.
pub fn run_single(spec: &ExperimentSpec) -> Result<(TrialOutcome, Option<Solution>)> {
    spec.validate()?;
    let seed = instance_seed(spec.experiment.seed, 0, 0);
    let inst = match &spec.experiment.input {
        Some(path) => load_instance(path)?,
        None => plant_instance(spec, spec.experiment.samples, seed)?,
    };
    run_trial(spec, &inst, seed)
}

/// `trials` planted instances, each with its full trace.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    let e = &spec.experiment;
    map_trials(e.threads, e.trials, |t| {
        let seed = instance_seed(e.seed, 0, t);
        let inst = plant_instance(spec, e.samples, seed)?;
        Ok(run_trial(spec, &inst, seed)?.0)
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub grid_value: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl SweepPoint {
    pub fn success_fraction(&self) -> f64 {
        self.outcomes.iter().filter(|o| o.recovered()).count() as f64 / self.outcomes.len() as f64
    }

    /// Mean and sample standard deviation of the squared relative error;
    /// a diverged trial counts as infinite error.
    pub fn squared_error_stats(&self) -> (f64, f64) {
        let sq: Vec<f64> = self
            .outcomes
            .iter()
            .map(|o| o.rel_err_x.map_or(f64::INFINITY, |e| e * e))
            .collect();
        let n = sq.len() as f64;
        let mean = sq.iter().sum::<f64>() / n;
        if sq.len() < 2 || !mean.is_finite() {
            return (mean, if mean.is_finite() { 0.0 } else { f64::NAN });
        }
        let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    pub fn audit(&self) -> ConstraintAudit {
        let mut total = ConstraintAudit::default();
        for o in &self.outcomes {
            total.merge(&o.audit);
        }
        total
    }
}

fn nothing_observed(spec: &ExperimentSpec, value: f64) -> bool {
    match spec.experiment.model {
        ModelKind::Sensing => value < 1.0,
        ModelKind::RpcaPartial => value <= 0.0,
        ModelKind::RpcaFull => false,
    }
}

/// Every grid value × trial, seeded per (point, trial).
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let e = &spec.experiment;
    let grid = spec.grid_values();
    let jobs = grid.len() * e.trials;
    let flat = map_trials(e.threads, jobs, |k| {
        let (point, trial) = (k / e.trials, k % e.trials);
        let value = grid[point];
        let seed = instance_seed(e.seed, point, trial);
        if nothing_observed(spec, value) {
            return Ok(TrialOutcome {
                seed,
                trace: RunTrace::new(),
                rel_err_x: Some(1.0),
                rel_err_s: Some(1.0),
                rmse: None,
                gd_iterations: 0,
                secs: 0.0,
                audit: ConstraintAudit::default(),
                failure: None,
            });
        }
        let inst = plant_instance(spec, Some(value), seed)?;
        Ok(run_trial(spec, &inst, seed)?.0)
    })?;
    let mut flat = flat.into_iter();
    Ok(grid
        .iter()
        .map(|&grid_value| SweepPoint {
            grid_value,
            outcomes: flat.by_ref().take(e.trials).collect(),
        })
        .collect())
}

/// Success fraction per grid value.
pub fn run_phase_transition(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    run_sweep(spec)
}

/// Squared-error statistics per grid value.
pub fn run_stat_rate(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    run_sweep(spec)
}

pub fn phase_csv(spec: &ExperimentSpec, points: &[SweepPoint]) -> String {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let ok = p.outcomes.iter().filter(|o| o.recovered()).count();
            vec![
                format!("{}", p.grid_value),
                ok.to_string(),
                p.outcomes.len().to_string(),
                format!("{:e}", p.success_fraction()),
            ]
        })
        .collect();
    crate::io::table_csv(&spec.to_json(), &["grid_value", "successes", "trials", "success_fraction"], &rows)
}

pub fn rate_csv(spec: &ExperimentSpec, points: &[SweepPoint]) -> String {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let (mean, std) = p.squared_error_stats();
            vec![
                format!("{}", p.grid_value),
                p.outcomes.len().to_string(),
                format!("{mean:e}"),
                format!("{std:e}"),
            ]
        })
        .collect();
    crate::io::table_csv(&spec.to_json(), &["grid_value", "trials", "mean_sq_rel_err", "std_sq_rel_err"], &rows)
}

pub fn trace_csv(spec: &ExperimentSpec, outcomes: &[TrialOutcome], tag_trials: bool) -> String {
    let traces: Vec<(Option<usize>, &RunTrace)> = outcomes
        .iter()
        .enumerate()
        .map(|(t, o)| (tag_trials.then_some(t), &o.trace))
        .collect();
    crate::io::trace_csv(&spec.to_json(), &traces)
}
