use super::{svd_r, DenseMatrix};
use crate::error::{Error, Result};

/// Orthonormal `R` minimizing `‖z − z_star · R‖_F`.
///
/// `R` is the polar factor of `z_starᵀ · z`: with `z_starᵀ z = Ũ Σ Ṽᵀ`,
/// `R = Ũ Ṽᵀ`. When `z_starᵀ z` is rank deficient the singular vectors still
/// complete to orthonormal bases, and any completion attains the minimum.
pub fn procrustes_rotation(z: &DenseMatrix, z_star: &DenseMatrix) -> Result<DenseMatrix> {
    if z.shape() != z_star.shape() {
        return Err(Error::dimension(format!(
            "procrustes: {}x{} against {}x{}",
            z.rows(),
            z.cols(),
            z_star.rows(),
            z_star.cols()
        )));
    }
    let cross = z_star.t_matmul(z)?;
    let r = cross.rows();
    let svd = svd_r(&cross, r)?;
    svd.left.matmul_t(&svd.right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_give_identity() {
        let z = DenseMatrix::from_rows(&[&[1.0, 0.5], &[-0.3, 2.0], &[0.7, 0.1]]).unwrap();
        let r = procrustes_rotation(&z, &z).unwrap();
        assert!(r.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_sign_flip() {
        let z_star = DenseMatrix::new(3, 1, vec![1.0, -2.0, 0.5]).unwrap();
        let z = z_star.scale(-1.0);
        let r = procrustes_rotation(&z, &z_star).unwrap();
        assert!((r[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_cross_product_still_orthonormal() {
        let z_star = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]).unwrap();
        let z = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let r = procrustes_rotation(&z, &z_star).unwrap();
        let g = r.t_matmul(&r).unwrap();
        assert!(g.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let a = DenseMatrix::zeros(3, 2);
        let b = DenseMatrix::zeros(2, 2);
        assert!(procrustes_rotation(&a, &b).is_err());
    }
}
