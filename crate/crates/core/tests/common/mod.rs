#![allow(dead_code)]

use lrsparse::DenseMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Haar-ish orthonormal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthonormal(r: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let g = gaussian(r, r, rng);
    let q = DMatrix::from_row_slice(r, r, g.as_slice()).qr().q();
    DenseMatrix::from_fn(r, r, |i, j| q[(i, j)])
}

/// Matrix with `count` nonzeros at distinct random positions.
pub fn random_sparse(rows: usize, cols: usize, count: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut idx: Vec<usize> = (0..rows * cols).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
    let mut m = DenseMatrix::zeros(rows, cols);
    for &k in &idx[..count] {
        let v: f64 = StandardNormal.sample(rng);
        m.as_mut_slice()[k] = if v == 0.0 { 1.0 } else { v };
    }
    m
}

/// Sparse matrix with at most `per_line` nonzeros in every row and column.
pub fn random_class_member(d: usize, per_line: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    // union of `per_line` random permutation matrices, with random values
    let mut m = DenseMatrix::zeros(d, d);
    for _ in 0..per_line {
        let mut perm: Vec<usize> = (0..d).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), rng);
        for (i, &j) in perm.iter().enumerate() {
            if rng.random::<f64>() < 0.7 {
                m[(i, j)] = StandardNormal.sample(rng);
            }
        }
    }
    m
}
