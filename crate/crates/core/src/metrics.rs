//! Recovery error metrics.

use crate::error::{Error, Result};
use crate::numerics::{procrustes_rotation, svd_r, DenseMatrix};
use crate::solver::FactorPair;
use crate::synthetic::GroundTruth;

/// `d(Z, Z*) = min_R ‖Z − Z*R‖_F` over orthonormal `R`, with `Z = [U; V]`.
pub fn factor_distance(z: &FactorPair, z_star: &FactorPair) -> Result<f64> {
    let stacked = z.stacked()?;
    let stacked_star = z_star.stacked()?;
    rotation_distance(&stacked, &stacked_star)
}

/// `min_R ‖a − b·R‖_F` for already stacked factors.
pub fn rotation_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let r = procrustes_rotation(a, b)?;
    Ok(a.sub(&b.matmul(&r)?)?.frobenius_norm())
}

/// `D(Z, S) = d²(Z, Z*) + ‖S − S*‖²_F / σ₁`.
pub fn combined_error(z: &FactorPair, s: &DenseMatrix, truth: &GroundTruth) -> Result<f64> {
    combined_error_with(z, s, &truth.star_factors()?, &truth.s_star, truth.sigma1)
}

/// [`combined_error`] with precomputed star factors.
pub fn combined_error_with(
    z: &FactorPair,
    s: &DenseMatrix,
    z_star: &FactorPair,
    s_star: &DenseMatrix,
    sigma1: f64,
) -> Result<f64> {
    if !(sigma1 > 0.0) {
        return Err(Error::parameter("sigma1", "degenerate truth: σ₁ must be positive"));
    }
    let d = factor_distance(z, z_star)?;
    Ok(d * d + s.sub(s_star)?.frobenius_norm_sq() / sigma1)
}

/// `‖x_hat − x_star‖_F / ‖x_star‖_F`.
pub fn relative_error(x_hat: &DenseMatrix, x_star: &DenseMatrix) -> Result<f64> {
    let denom = x_star.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::parameter("x_star", "relative error against a zero matrix"));
    }
    Ok(x_hat.sub(x_star)?.frobenius_norm() / denom)
}

/// `‖x_hat − x_star‖_F / √(d₁d₂)`.
pub fn rmse(x_hat: &DenseMatrix, x_star: &DenseMatrix) -> Result<f64> {
    let (d1, d2) = x_star.shape();
    Ok(x_hat.sub(x_star)?.frobenius_norm() / ((d1 * d2) as f64).sqrt())
}

/// Incoherence `α(x) = max(d₁‖Ū‖²_{2,∞}, d₂‖V̄‖²_{2,∞}) / r` from the top-`r`
/// singular vectors of `x`.
pub fn measure_incoherence(x: &DenseMatrix, r: usize) -> Result<f64> {
    let svd = svd_r(x, r)?;
    let (d1, d2) = x.shape();
    let u = svd.left.max_row_norm();
    let v = svd.right.max_row_norm();
    Ok((d1 as f64 * u * u).max(d2 as f64 * v * v) / r as f64)
}
