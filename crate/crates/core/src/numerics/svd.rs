use faer::MatRef;

use super::DenseMatrix;
use crate::error::{Error, Result};

fn as_faer(m: &DenseMatrix) -> MatRef<'_, f64> {
    MatRef::from_row_major_slice(m.as_slice(), m.rows(), m.cols())
}

/// Truncated singular value decomposition `m ≈ left · diag(σ) · rightᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// `rows × k`, orthonormal columns.
    pub left: DenseMatrix,
    /// Nonincreasing, nonnegative, length `k`.
    pub singular_values: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub right: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `left · diag(σ) · rightᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.left
            .scale_columns(&self.singular_values)
            .and_then(|us| us.matmul_t(&self.right))
            .expect("svd factors have consistent shapes")
    }

    /// Balanced factors `(left · Σ^{1/2}, right · Σ^{1/2})`.
    pub fn balanced_factors(&self) -> (DenseMatrix, DenseMatrix) {
        let roots: Vec<f64> = self.singular_values.iter().map(|s| s.sqrt()).collect();
        let u = self.left.scale_columns(&roots).expect("matching rank");
        let v = self.right.scale_columns(&roots).expect("matching rank");
        (u, v)
    }
}

/// Top-`k` singular triplets of `m`.
///
/// Singular vectors follow a fixed sign convention: the largest-magnitude
/// entry of each left vector is positive (lowest index wins ties) and the
/// matching right vector is flipped with it.
pub fn svd_r(m: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let min_dim = m.rows().min(m.cols());
    if k == 0 || k > min_dim {
        return Err(Error::dimension(format!(
            "svd rank {k} outside 1..={min_dim} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let svd = as_faer(m).thin_svd().map_err(|e| {
        Error::Numerical(format!("svd of a {}x{} matrix failed: {e:?}", m.rows(), m.cols()))
    })?;
    let u = svd.U();
    let v = svd.V();
    let sv: Vec<f64> = svd.S().column_vector().iter().copied().collect();

    // Stable sort keeps equal singular values in backend order.
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    order.truncate(k);

    let mut left = DenseMatrix::zeros(m.rows(), k);
    let mut right = DenseMatrix::zeros(m.cols(), k);
    let mut singular_values = Vec::with_capacity(k);
    for (c, &idx) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..m.rows() {
            if u[(i, idx)].abs() > u[(pivot, idx)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, idx)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m.rows() {
            left[(i, c)] = sign * u[(i, idx)];
        }
        for j in 0..m.cols() {
            right[(j, c)] = sign * v[(j, idx)];
        }
        singular_values.push(sv[idx].max(0.0));
    }
    if !(left.is_finite() && right.is_finite() && singular_values.iter().all(|s| s.is_finite())) {
        return Err(Error::Numerical("svd produced non-finite factors".into()));
    }
    Ok(SvdResult {
        left,
        singular_values,
        right,
    })
}

/// Largest singular value `σ₁(m)`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let values = as_faer(m)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("spectral norm: svd failed: {e:?}")))?;
    let top = values.iter().copied().fold(0.0, f64::max);
    if !top.is_finite() {
        return Err(Error::Numerical("spectral norm is not finite".into()));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let g = q.t_matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let res = svd_r(&DenseMatrix::identity(3), 3).unwrap();
        for s in &res.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert!(orthonormality_error(&res.left) < 1e-12);
        assert!(orthonormality_error(&res.right) < 1e-12);
    }

    #[test]
    fn diagonal_top_vector_is_first_axis() {
        let m = DenseMatrix::from_diagonal(&[5.0, 2.0]);
        let res = svd_r(&m, 1).unwrap();
        assert!((res.singular_values[0] - 5.0).abs() < 1e-14);
        assert!((res.left[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(res.left[(1, 0)].abs() < 1e-14);
        assert!((res.right[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sign_convention_makes_dominant_entry_positive() {
        let m = DenseMatrix::from_rows(&[&[-3.0, 0.0], &[-1.0, 0.5], &[0.2, 2.0]]).unwrap();
        let res = svd_r(&m, 2).unwrap();
        for c in 0..2 {
            let col = res.left.column(c);
            let pivot = col
                .iter()
                .enumerate()
                .fold(0, |p, (i, v)| if v.abs() > col[p].abs() { i } else { p });
            assert!(col[pivot] > 0.0);
        }
        let back = res.reconstruct();
        assert!(back.sub(&m).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rank_out_of_range_is_a_dimension_error() {
        let m = DenseMatrix::zeros(3, 2);
        assert!(matches!(svd_r(&m, 0), Err(Error::Dimension(_))));
        assert!(matches!(svd_r(&m, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // ‖u‖ = 3, ‖v‖ = 2
        let u = DenseMatrix::new(3, 1, vec![1.0, 2.0, 2.0]).unwrap();
        let v = DenseMatrix::new(2, 1, vec![0.0, 2.0]).unwrap();
        let m = u.matmul_t(&v).unwrap();
        assert!((spectral_norm(&m).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(4, 3)).unwrap(), 0.0);
    }

    #[test]
    fn zero_matrix_svd_is_well_defined() {
        let res = svd_r(&DenseMatrix::zeros(4, 3), 2).unwrap();
        assert_eq!(res.singular_values, vec![0.0, 0.0]);
        let (u, v) = res.balanced_factors();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(v.max_abs(), 0.0);
    }
}
