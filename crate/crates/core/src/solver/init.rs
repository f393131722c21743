use std::time::Instant;

use super::{FactorPair, InitConfig, Phase, RunTrace, SolverConfig, TraceRecord, TruthEval};
use crate::error::{Error, Result};
use crate::models::ObservationModel;
use crate::numerics::{svd_r, DenseMatrix};
use crate::operators::{clip_from_svd, hard_threshold};
use crate::synthetic::GroundTruth;

/// Initialization phase.
///
/// Starting from `X₀ = S₀ = 0`, each of the `L` steps evaluates the loss
/// gradient `G` once at `X_ℓ + S_ℓ` and updates both blocks from it:
///
/// * `S_{ℓ+1} = H_{⌊λs⌋}(S_ℓ − τ'G)`
/// * `X_{ℓ+1} = clip_ζ(SVD_k(X_ℓ − η'G))` with `k = ⌈λ'r⌉` and
///   `ζ = c_ζ·α·r·σ̂₁/√(d₁d₂)`, `σ̂₁` the top singular value of the candidate.
///
/// Returns the balanced rank-`r` factors of `X_L`, `S_L`, and the trace of
/// the `L + 1` visited points.
pub fn init_phase(
    model: &ObservationModel,
    cfg: &SolverConfig,
    icfg: &InitConfig,
    truth: Option<&GroundTruth>,
) -> Result<(FactorPair, DenseMatrix, RunTrace)> {
    cfg.validate()?;
    icfg.validate()?;
    let (d1, d2) = model.shape();
    if cfg.rank > d1.min(d2) {
        return Err(Error::parameter(
            "rank",
            format!("rank {} exceeds min({d1}, {d2})", cfg.rank),
        ));
    }
    let truth = truth.map(|t| TruthEval::new(t, false)).transpose()?;
    if let Some(t) = &truth {
        t.check_shape(model)?;
    }
    let keep = (icfg.lambda * cfg.s_count as f64 + 1e-9).floor() as usize;
    let k = icfg.projection_rank(cfg.rank, d1.min(d2));
    let zeta_scale = icfg.zeta_coeff * cfg.alpha * cfg.rank as f64 / ((d1 * d2) as f64).sqrt();

    let mut x = DenseMatrix::zeros(d1, d2);
    let mut s = DenseMatrix::zeros(d1, d2);
    let mut trace = RunTrace::new();
    let mut clock = Instant::now();

    for step in 0..=icfg.iters {
        let eval = model.evaluate(&x.add(&s)?)?;
        if !eval.loss.is_finite() {
            return Err(Error::Divergence {
                phase: "init",
                iteration: step,
            });
        }
        let secs = cfg.record_timing.then(|| {
            let now = Instant::now();
            let secs = now.duration_since(clock).as_secs_f64();
            clock = now;
            secs
        });
        trace.push(TraceRecord {
            iteration: step,
            phase: Phase::Init,
            objective: eval.loss,
            rel_err_x: truth.as_ref().map(|t| t.rel_err_x(&x)).transpose()?.flatten(),
            rel_err_s: truth.as_ref().map(|t| t.rel_err_s(&s)).transpose()?.flatten(),
            d2_z: None,
            combined: None,
            secs,
        });
        if step == icfg.iters {
            break;
        }

        let g = eval.grad;
        let mut s_next = s.clone();
        s_next.axpy(-icfg.tau_prime, &g)?;
        let s_next = hard_threshold(&s_next, keep);

        let mut candidate = x;
        candidate.axpy(-icfg.eta_prime, &g)?;
        let svd = svd_r(&candidate, k)?;
        let sigma_hat = svd.singular_values[0];
        x = if sigma_hat > 0.0 {
            clip_from_svd(&svd, zeta_scale * sigma_hat)
        } else {
            DenseMatrix::zeros(d1, d2)
        };
        s = s_next;
    }

    let (u, v) = svd_r(&x, cfg.rank)?.balanced_factors();
    Ok((FactorPair::new(u, v)?, s, trace))
}
