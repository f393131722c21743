//! Two-stage recovery: spectral/hard-thresholding initialization followed by
//! factored gradient descent with double thresholding.
//!
//! [`init_phase`] runs `L` simultaneous steps on `(X, S)` from zero, projecting
//! `S` by hard thresholding and `X` by a rank projection with entrywise
//! clipping, then splits `X_L` into balanced factors. [`gd_phase`] descends on
//! `(U, V, S)`, keeping `U` and `V` inside row-norm balls fixed by the starting
//! point and `S` inside the sparse class via [`double_threshold`]. [`solve`]
//! chains the two.
//!
//! [`double_threshold`]: crate::operators::double_threshold

mod config;
mod gd;
mod init;
mod trace;

pub use config::{InitConfig, SolverConfig};
pub use gd::{gd_phase, gd_phase_observed, GdIterate, RowNormBounds};
pub use init::init_phase;
pub use trace::{Phase, RunTrace, TraceRecord};

use crate::error::{Error, Result};
use crate::metrics::relative_error;
use crate::models::ObservationModel;
use crate::numerics::DenseMatrix;
use crate::synthetic::GroundTruth;

/// Objective changes are compared across this many iterations for early stopping.
pub const STOP_WINDOW: usize = 5;

/// Factored iterate `X = U·Vᵀ`, stacked as `Z = [U; V]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl FactorPair {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::dimension(format!(
                "factor ranks differ: U has {} columns, V has {}",
                u.cols(),
                v.cols()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// `U·Vᵀ`.
    pub fn product(&self) -> Result<DenseMatrix> {
        self.u.matmul_t(&self.v)
    }

    /// `Z = [U; V]`.
    pub fn stacked(&self) -> Result<DenseMatrix> {
        DenseMatrix::vstack(&self.u, &self.v)
    }

    /// `(U·R, V·R)`.
    pub fn rotated(&self, r: &DenseMatrix) -> Result<Self> {
        Self::new(self.u.matmul(r)?, self.v.matmul(r)?)
    }
}

/// Output of the gradient phase: the final triple and its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub factors: FactorPair,
    pub sparse: DenseMatrix,
    /// `U·Vᵀ`, materialized.
    pub x_hat: DenseMatrix,
    pub trace: RunTrace,
}

/// Initialization followed by gradient descent; the traces are concatenated.
pub fn solve(
    model: &ObservationModel,
    cfg: &SolverConfig,
    icfg: &InitConfig,
    truth: Option<&GroundTruth>,
) -> Result<Solution> {
    solve_observed(model, cfg, icfg, truth, &mut |_| {})
}

/// [`solve`] with a callback invoked after every gradient-phase update.
pub fn solve_observed(
    model: &ObservationModel,
    cfg: &SolverConfig,
    icfg: &InitConfig,
    truth: Option<&GroundTruth>,
    observer: &mut dyn FnMut(&GdIterate<'_>),
) -> Result<Solution> {
    let (factors, sparse, init_trace) = init_phase(model, cfg, icfg, truth)?;
    let mut solution = gd_phase_observed(model, cfg, (factors, sparse), truth, observer)?;
    let mut trace = init_trace;
    trace.extend(std::mem::take(&mut solution.trace));
    solution.trace = trace;
    Ok(solution)
}

/// Ground-truth quantities reused on every traced iteration.
pub(crate) struct TruthEval<'a> {
    truth: &'a GroundTruth,
    z_star: Option<FactorPair>,
    s_norm: f64,
}

impl<'a> TruthEval<'a> {
    pub(crate) fn new(truth: &'a GroundTruth, with_factors: bool) -> Result<Self> {
        Ok(Self {
            z_star: if with_factors {
                Some(truth.star_factors()?)
            } else {
                None
            },
            s_norm: truth.s_star.frobenius_norm(),
            truth,
        })
    }

    pub(crate) fn check_shape(&self, model: &ObservationModel) -> Result<()> {
        if self.truth.shape() != model.shape() {
            return Err(Error::dimension("ground truth and model shapes differ"));
        }
        Ok(())
    }

    pub(crate) fn rel_err_x(&self, x: &DenseMatrix) -> Result<Option<f64>> {
        if self.truth.x_star.frobenius_norm() == 0.0 {
            return Ok(None);
        }
        relative_error(x, &self.truth.x_star).map(Some)
    }

    pub(crate) fn rel_err_s(&self, s: &DenseMatrix) -> Result<Option<f64>> {
        if self.s_norm == 0.0 {
            return Ok(None);
        }
        Ok(Some(s.sub(&self.truth.s_star)?.frobenius_norm() / self.s_norm))
    }

    /// `(d²(Z, Z*), D(Z, S))`.
    pub(crate) fn factor_errors(&self, z: &FactorPair, s: &DenseMatrix) -> Result<(Option<f64>, Option<f64>)> {
        let Some(z_star) = &self.z_star else {
            return Ok((None, None));
        };
        if z_star.rank() != z.rank() || self.truth.sigma1 <= 0.0 {
            return Ok((None, None));
        }
        let d = crate::metrics::factor_distance(z, z_star)?;
        let d2 = d * d;
        let combined = d2 + s.sub(&self.truth.s_star)?.frobenius_norm_sq() / self.truth.sigma1;
        Ok((Some(d2), Some(combined)))
    }
}
