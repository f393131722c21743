use std::time::Instant;

use super::{FactorPair, Phase, RunTrace, Solution, SolverConfig, TraceRecord, TruthEval, STOP_WINDOW};
use crate::error::{Error, Result};
use crate::models::{balance_penalty, factored_gradient, ObservationModel};
use crate::numerics::{spectral_norm, DenseMatrix};
use crate::operators::{project_row_norm_in_place, DoubleThreshold};
use crate::synthetic::GroundTruth;

/// Row-norm radii of the factor constraint sets, fixed from the starting point:
/// `‖U‖_{2,∞} ≤ √(αr/d₁)·‖Z⁰‖₂` and `‖V‖_{2,∞} ≤ √(αr/d₂)·‖Z⁰‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowNormBounds {
    pub u: f64,
    pub v: f64,
}

impl RowNormBounds {
    pub fn from_start(start: &FactorPair, alpha: f64) -> Result<(Self, f64)> {
        let z_norm = spectral_norm(&start.stacked()?)?;
        let r = start.rank() as f64;
        let d1 = start.u.rows() as f64;
        let d2 = start.v.rows() as f64;
        Ok((
            Self {
                u: (alpha * r / d1).sqrt() * z_norm,
                v: (alpha * r / d2).sqrt() * z_norm,
            },
            z_norm,
        ))
    }
}

/// State handed to observers after each gradient-phase update.
#[derive(Debug)]
pub struct GdIterate<'a> {
    /// Index of the iterate just produced (`t + 1` after update `t`).
    pub iteration: usize,
    pub u: &'a DenseMatrix,
    pub v: &'a DenseMatrix,
    pub s: &'a DenseMatrix,
    pub bounds: RowNormBounds,
    /// Hard-threshold budget `⌊γ's⌋`.
    pub sparse_budget: usize,
    /// Truncation fraction `γβ`.
    pub theta: f64,
}

/// Gradient-descent phase from `start = (U⁰, V⁰, S⁰)`.
///
/// Each iteration evaluates `G = ∇L(UᵗVᵗᵀ + Sᵗ)` once and applies
///
/// * `Sᵗ⁺¹ = T_{γβ} ∘ H_{⌊γ's⌋}(Sᵗ − τG)`
/// * `Uᵗ⁺¹ = P_{C₁}(Uᵗ − η(G·Vᵗ + ½Uᵗ(UᵗᵀUᵗ − VᵗᵀVᵗ)))`
/// * `Vᵗ⁺¹ = P_{C₂}(Vᵗ − η(Gᵀ·Uᵗ + ½Vᵗ(VᵗᵀVᵗ − UᵗᵀUᵗ)))`
///
/// with `η = c_η/σ̂₁` and `σ̂₁ = ‖Z⁰‖₂²/2`. Stops after `T` updates or once the
/// objective moves by at most `tol` (relative) over [`STOP_WINDOW`] iterations.
pub fn gd_phase(
    model: &ObservationModel,
    cfg: &SolverConfig,
    start: (FactorPair, DenseMatrix),
    truth: Option<&GroundTruth>,
) -> Result<Solution> {
    gd_phase_observed(model, cfg, start, truth, &mut |_| {})
}

/// [`gd_phase`] with a callback invoked after every update.
pub fn gd_phase_observed(
    model: &ObservationModel,
    cfg: &SolverConfig,
    start: (FactorPair, DenseMatrix),
    truth: Option<&GroundTruth>,
    observer: &mut dyn FnMut(&GdIterate<'_>),
) -> Result<Solution> {
    cfg.validate()?;
    let (FactorPair { mut u, mut v }, mut s) = start;
    let (d1, d2) = model.shape();
    if u.rows() != d1 || v.rows() != d2 || s.shape() != (d1, d2) {
        return Err(Error::dimension(format!(
            "start ({}x{}, {}x{}, {}x{}) does not fit a {d1}x{d2} model",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols(),
            s.rows(),
            s.cols()
        )));
    }
    if u.cols() != cfg.rank || v.cols() != cfg.rank {
        return Err(Error::dimension(format!(
            "start factors have rank {} and {}, config says {}",
            u.cols(),
            v.cols(),
            cfg.rank
        )));
    }
    let truth = truth.map(|t| TruthEval::new(t, true)).transpose()?;
    if let Some(t) = &truth {
        t.check_shape(model)?;
    }

    let thresholds = DoubleThreshold::new(cfg.gamma, cfg.gamma_prime, cfg.s_count, cfg.beta)?;
    let (bounds, z_norm) = RowNormBounds::from_start(&FactorPair { u: u.clone(), v: v.clone() }, cfg.alpha)?;
    let sigma_hat = z_norm * z_norm / 2.0;
    // A zero start has zero factor gradients; any step leaves it in place.
    let eta = if sigma_hat > 0.0 { cfg.eta_coeff / sigma_hat } else { 0.0 };

    let mut trace = RunTrace::new();
    let mut objectives: Vec<f64> = Vec::new();
    let mut clock = Instant::now();

    let mut t = 0;
    loop {
        let x = u.matmul_t(&v)?;
        let eval = model.evaluate(&x.add(&s)?)?;
        let objective = eval.loss + balance_penalty(&u, &v)?;
        if !objective.is_finite() {
            return Err(Error::Divergence {
                phase: "gd",
                iteration: t,
            });
        }
        let secs = cfg.record_timing.then(|| {
            let now = Instant::now();
            let secs = now.duration_since(clock).as_secs_f64();
            clock = now;
            secs
        });
        let mut record = TraceRecord {
            iteration: t,
            phase: Phase::Gd,
            objective,
            rel_err_x: None,
            rel_err_s: None,
            d2_z: None,
            combined: None,
            secs,
        };
        if let Some(te) = &truth {
            record.rel_err_x = te.rel_err_x(&x)?;
            record.rel_err_s = te.rel_err_s(&s)?;
            let z = FactorPair { u: u.clone(), v: v.clone() };
            (record.d2_z, record.combined) = te.factor_errors(&z, &s)?;
        }
        trace.push(record);
        objectives.push(objective);

        if t == cfg.max_iters || converged(&objectives, cfg.tol) {
            return Ok(Solution {
                factors: FactorPair { u, v },
                sparse: s,
                x_hat: x,
                trace,
            });
        }

        let g = eval.grad;
        let mut s_step = s.clone();
        s_step.axpy(-cfg.tau, &g)?;
        let s_next = thresholds.apply(&s_step);

        let (grad_u, grad_v) = factored_gradient(&g, &u, &v)?;
        u.axpy(-eta, &grad_u)?;
        v.axpy(-eta, &grad_v)?;
        project_row_norm_in_place(&mut u, bounds.u);
        project_row_norm_in_place(&mut v, bounds.v);
        s = s_next;
        t += 1;

        observer(&GdIterate {
            iteration: t,
            u: &u,
            v: &v,
            s: &s,
            bounds,
            sparse_budget: thresholds.keep,
            theta: thresholds.theta,
        });
    }
}

fn converged(objectives: &[f64], tol: f64) -> bool {
    let n = objectives.len();
    if n <= STOP_WINDOW {
        return false;
    }
    let now = objectives[n - 1];
    let then = objectives[n - 1 - STOP_WINDOW];
    (now - then).abs() <= tol * then.abs().max(f64::MIN_POSITIVE)
}
