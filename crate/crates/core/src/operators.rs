//! Structured projection and thresholding operators.
//!
//! * [`hard_threshold`] keeps the `k` largest-magnitude entries.
//! * [`truncate`] keeps entries that are among the largest `⌈θ·d₂⌉` of their
//!   row and the largest `⌈θ·d₁⌉` of their column.
//! * [`double_threshold`] is the sparse update of the gradient phase:
//!   truncation applied after hard thresholding.
//! * [`project_row_norm`] is the Euclidean projection onto a `‖·‖_{2,∞}` ball.
//! * [`rank_project_clipped`] is one alternating-projection step onto
//!   `{rank ≤ k} ∩ {‖·‖_{∞,∞} ≤ ζ}`: best rank-`k` approximation, then clipping.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::{dot, svd_r, DenseMatrix, SvdResult};

/// Slack absorbed before taking ceilings of `θ·d`, so that products such as
/// `0.1 · 30 = 3.0000000000000004` count as 3.
const CEIL_SLACK: f64 = 1e-9;

/// Parameters of the truncation operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    theta: f64,
    rows: usize,
    cols: usize,
}

impl TruncationParams {
    pub fn new(theta: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::parameter(
                "theta",
                format!("must lie in (0, 1], got {theta}"),
            ));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::dimension("truncation over an empty matrix"));
        }
        Ok(Self { theta, rows, cols })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Entries kept per row, `⌈θ·d₂⌉`.
    pub fn row_quota(&self) -> usize {
        ceil_count(self.theta, self.cols)
    }

    /// Entries kept per column, `⌈θ·d₁⌉`.
    pub fn col_quota(&self) -> usize {
        ceil_count(self.theta, self.rows)
    }
}

pub(crate) fn ceil_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - CEIL_SLACK).ceil().max(1.0) as usize).min(n)
}

/// Descending by magnitude, then ascending by position.
#[inline]
fn magnitude_order(values: &[f64], a: usize, b: usize) -> Ordering {
    values[b]
        .abs()
        .total_cmp(&values[a].abs())
        .then_with(|| a.cmp(&b))
}

/// Keeps the `k` largest-magnitude entries of `s` and zeroes the rest.
///
/// Ties at the cut go to the smaller row index, then the smaller column index.
pub fn hard_threshold(s: &DenseMatrix, k: usize) -> DenseMatrix {
    let values = s.as_slice();
    if k >= values.len() {
        return s.clone();
    }
    let mut out = DenseMatrix::zeros(s.rows(), s.cols());
    if k == 0 {
        return out;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.select_nth_unstable_by(k - 1, |&a, &b| magnitude_order(values, a, b));
    let dst = out.as_mut_slice();
    for &idx in &order[..k] {
        dst[idx] = values[idx];
    }
    out
}

/// Marks the `k` largest magnitudes among `values[idx]` for `idx` in `positions`,
/// ties going to the earlier position.
fn mark_top(values: &[f64], positions: &mut [usize], k: usize, keep: &mut [bool]) {
    if k < positions.len() {
        positions.select_nth_unstable_by(k - 1, |&a, &b| magnitude_order(values, a, b));
    }
    for &idx in &positions[..k.min(positions.len())] {
        keep[idx] = true;
    }
}

/// Truncation operator `T_θ`.
///
/// Entry `(i, j)` survives iff it is nonzero, among the `⌈θ·d₂⌉` largest
/// magnitudes of row `i` and among the `⌈θ·d₁⌉` largest of column `j`.
/// Ties are ranked by position, so the quotas hold exactly.
pub fn truncate(s: &DenseMatrix, params: &TruncationParams) -> Result<DenseMatrix> {
    if s.shape() != (params.rows, params.cols) {
        return Err(Error::dimension(format!(
            "truncation parameters for {}x{} applied to {}x{}",
            params.rows,
            params.cols,
            s.rows(),
            s.cols()
        )));
    }
    let (d1, d2) = s.shape();
    let values = s.as_slice();
    let mut in_row = vec![false; values.len()];
    let mut in_col = vec![false; values.len()];
    let mut positions = Vec::with_capacity(d1.max(d2));
    for i in 0..d1 {
        positions.clear();
        positions.extend(i * d2..(i + 1) * d2);
        mark_top(values, &mut positions, params.row_quota(), &mut in_row);
    }
    for j in 0..d2 {
        positions.clear();
        positions.extend((0..d1).map(|i| i * d2 + j));
        mark_top(values, &mut positions, params.col_quota(), &mut in_col);
    }

    let mut out = DenseMatrix::zeros(d1, d2);
    for (idx, dst) in out.as_mut_slice().iter_mut().enumerate() {
        if values[idx] != 0.0 && in_row[idx] && in_col[idx] {
            *dst = values[idx];
        }
    }
    Ok(out)
}

/// Validated parameters for [`double_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleThreshold {
    /// Hard-threshold budget `⌊γ'·s⌋`.
    pub keep: usize,
    /// Truncation fraction `γ·β`.
    pub theta: f64,
}

impl DoubleThreshold {
    pub fn new(gamma: f64, gamma_prime: f64, s_count: usize, beta: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::parameter("gamma", format!("must exceed 1, got {gamma}")));
        }
        if !(gamma_prime > 1.0 && gamma_prime.is_finite()) {
            return Err(Error::parameter(
                "gamma_prime",
                format!("must exceed 1, got {gamma_prime}"),
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::parameter("beta", format!("must lie in (0, 1), got {beta}")));
        }
        let theta = gamma * beta;
        if theta > 1.0 {
            return Err(Error::parameter(
                "gamma",
                format!("gamma * beta = {theta} exceeds 1"),
            ));
        }
        let keep = (gamma_prime * s_count as f64 + CEIL_SLACK).floor() as usize;
        Ok(Self { keep, theta })
    }

    pub fn apply(&self, s: &DenseMatrix) -> DenseMatrix {
        let kept = hard_threshold(s, self.keep);
        let params = TruncationParams::new(self.theta, s.rows(), s.cols())
            .expect("theta validated at construction");
        truncate(&kept, &params).expect("shape taken from input")
    }
}

/// `T_{γβ} ∘ H_{⌊γ'·s⌋}`.
pub fn double_threshold(
    s: &DenseMatrix,
    gamma: f64,
    gamma_prime: f64,
    s_count: usize,
    beta: f64,
) -> Result<DenseMatrix> {
    Ok(DoubleThreshold::new(gamma, gamma_prime, s_count, beta)?.apply(s))
}

/// Euclidean projection onto `{M : ‖M‖_{2,∞} ≤ bound}`: rows longer than
/// `bound` are rescaled to length `bound`, the rest are untouched.
pub fn project_row_norm(m: &DenseMatrix, bound: f64) -> Result<DenseMatrix> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::parameter(
            "bound",
            format!("must be finite and nonnegative, got {bound}"),
        ));
    }
    let mut out = m.clone();
    project_row_norm_in_place(&mut out, bound);
    Ok(out)
}

pub(crate) fn project_row_norm_in_place(m: &mut DenseMatrix, bound: f64) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let norm = dot(row, row).sqrt();
        if norm > bound {
            let scale = bound / norm;
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// Clips every entry into `[-zeta, zeta]`.
pub(crate) fn clip_entries(m: &DenseMatrix, zeta: f64) -> DenseMatrix {
    m.map(|v| v.clamp(-zeta, zeta))
}

/// One alternating-projection step: best rank-`k` approximation via SVD,
/// then entrywise clipping to `[-zeta, zeta]`. The output always satisfies
/// the infinity-norm bound; its rank can exceed `k` once clipping bites.
pub fn rank_project_clipped(m: &DenseMatrix, k: usize, zeta: f64) -> Result<DenseMatrix> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::parameter(
            "zeta",
            format!("must be positive and finite, got {zeta}"),
        ));
    }
    let svd = svd_r(m, k)?;
    Ok(clip_from_svd(&svd, zeta))
}

pub(crate) fn clip_from_svd(svd: &SvdResult, zeta: f64) -> DenseMatrix {
    clip_entries(&svd.reconstruct(), zeta)
}
