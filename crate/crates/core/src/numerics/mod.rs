//! Dense matrices, truncated SVD and the orthogonal Procrustes solver.
//!
//! The SVD itself is delegated to faer's bidiagonal divide-and-conquer routine; this module
//! pins the ordering and sign conventions on top of it so that traces are
//! reproducible.

mod matrix;
mod procrustes;
mod svd;

pub use matrix::DenseMatrix;
pub(crate) use matrix::dot;
pub use procrustes::procrustes_rotation;
pub use svd::{spectral_norm, svd_r, SvdResult};
