//! Seeded generators for planted low-rank plus sparse instances.
//!
//! Every generator takes an explicit `u64` seed and draws from a ChaCha8
//! stream, so a fixed seed reproduces the instance bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::metrics::measure_incoherence;
use crate::models::{RpcaProblem, SensingProblem};
use crate::numerics::{dot, svd_r, DenseMatrix};
use crate::operators::ceil_count;
use crate::solver::FactorPair;

/// Per-row/column support cap used by [`gen_sparse`], as a multiple of `β·d`.
pub const SPARSE_ROW_CAP_FACTOR: f64 = 1.5;

/// Mixes a master seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A planted rank-`r` matrix with its measured spectrum and incoherence.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSample {
    pub x_star: DenseMatrix,
    pub sigma1: f64,
    pub sigma_r: f64,
    pub alpha_actual: f64,
}

/// `X* = U*V*ᵀ` with i.i.d. standard normal factor entries.
pub fn gen_lowrank(d1: usize, d2: usize, r: usize, seed: u64) -> Result<LowRankSample> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::parameter("d1/d2", "dimensions must be positive"));
    }
    if r == 0 || r > d1.min(d2) {
        return Err(Error::parameter(
            "rank",
            format!("must lie in 1..={}, got {r}", d1.min(d2)),
        ));
    }
    let mut rng = rng(seed);
    let u = gaussian_matrix(d1, r, &mut rng);
    let v = gaussian_matrix(d2, r, &mut rng);
    let x_star = u.matmul_t(&v)?;
    let svd = svd_r(&x_star, r)?;
    let alpha_actual = measure_incoherence(&x_star, r)?;
    Ok(LowRankSample {
        sigma1: svd.singular_values[0],
        sigma_r: svd.singular_values[r - 1],
        alpha_actual,
        x_star,
    })
}

/// Sparse corruption: each entry is nonzero with probability `beta`, with
/// value uniform on `[-amplitude, amplitude]`. Rows and columns holding more
/// than `⌈1.5·β·d⌉` nonzeros then lose randomly chosen excess entries.
pub fn gen_sparse(d1: usize, d2: usize, beta: f64, amplitude: f64, seed: u64) -> Result<DenseMatrix> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::parameter("d1/d2", "dimensions must be positive"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::parameter("beta", format!("must lie in (0, 1), got {beta}")));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::parameter(
            "amplitude",
            format!("must be finite and nonnegative, got {amplitude}"),
        ));
    }
    let mut rng = rng(seed);
    let mut s = DenseMatrix::from_fn(d1, d2, |_, _| {
        if rng.random::<f64>() < beta {
            rng.random_range(-amplitude..=amplitude)
        } else {
            0.0
        }
    });

    let row_cap = ceil_count(SPARSE_ROW_CAP_FACTOR * beta, d2);
    for i in 0..d1 {
        let mut support: Vec<usize> = (0..d2).filter(|&j| s[(i, j)] != 0.0).collect();
        if support.len() > row_cap {
            support.shuffle(&mut rng);
            for &j in &support[row_cap..] {
                s[(i, j)] = 0.0;
            }
        }
    }
    let col_cap = ceil_count(SPARSE_ROW_CAP_FACTOR * beta, d1);
    for j in 0..d2 {
        let mut support: Vec<usize> = (0..d1).filter(|&i| s[(i, j)] != 0.0).collect();
        if support.len() > col_cap {
            support.shuffle(&mut rng);
            for &i in &support[col_cap..] {
                s[(i, j)] = 0.0;
            }
        }
    }
    Ok(s)
}

/// `n` standard normal sensing matrices with `yᵢ = ⟨Aᵢ, X* + S*⟩ + εᵢ`,
/// `εᵢ ~ N(0, ν²)`.
pub fn gen_sensing(
    x_star: &DenseMatrix,
    s_star: &DenseMatrix,
    n: usize,
    noise_nu: f64,
    seed: u64,
) -> Result<SensingProblem> {
    if n == 0 {
        return Err(Error::parameter("n", "need at least one measurement"));
    }
    check_noise(noise_nu)?;
    let target = x_star.add(s_star)?;
    let (d1, d2) = target.shape();
    let len = d1 * d2;
    let mut rng = rng(seed);
    let mut design = Vec::with_capacity(n * len);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = design.len();
        design.extend((0..len).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let clean = dot(&design[start..], target.as_slice());
        y.push(if noise_nu > 0.0 {
            let eps: f64 = StandardNormal.sample(&mut rng);
            clean + noise_nu * eps
        } else {
            clean
        });
    }
    SensingProblem::from_design(d1, d2, design, y)
}

/// Observations of `X* + S* + E` on a Bernoulli(`p`) mask, with
/// `E_jk ~ N(0, ν²/(d₁d₂))`. The stored rate is the empirical fraction.
pub fn gen_rpca(
    x_star: &DenseMatrix,
    s_star: &DenseMatrix,
    p: f64,
    noise_nu: f64,
    seed: u64,
) -> Result<RpcaProblem> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::parameter("p", format!("must lie in (0, 1], got {p}")));
    }
    check_noise(noise_nu)?;
    let mut observed = x_star.add(s_star)?;
    let (d1, d2) = observed.shape();
    let mut rng = rng(seed);
    let mask: Vec<bool> = (0..d1 * d2).map(|_| rng.random::<f64>() < p).collect();
    if noise_nu > 0.0 {
        let sd = noise_nu / ((d1 * d2) as f64).sqrt();
        for v in observed.as_mut_slice() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += sd * e;
        }
    }
    if mask.iter().all(|&b| b) {
        return Ok(RpcaProblem::full(observed));
    }
    RpcaProblem::partial(observed, mask)
}

fn check_noise(nu: f64) -> Result<()> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::parameter(
            "noise",
            format!("must be finite and nonnegative, got {nu}"),
        ));
    }
    Ok(())
}

/// Planted truth retained for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x_star: DenseMatrix,
    pub s_star: DenseMatrix,
    pub sigma1: f64,
    pub sigma_r: f64,
    pub alpha_actual: f64,
    pub rank: usize,
    pub s_count: usize,
    pub beta: f64,
}

impl GroundTruth {
    /// Plants `X*` and `S*` from two streams derived from `seed`.
    pub fn plant(d1: usize, d2: usize, rank: usize, beta: f64, amplitude: f64, seed: u64) -> Result<Self> {
        let low = gen_lowrank(d1, d2, rank, derive_seed(seed, 1))?;
        let s_star = gen_sparse(d1, d2, beta, amplitude, derive_seed(seed, 2))?;
        Ok(Self {
            s_count: s_star.nnz(),
            x_star: low.x_star,
            s_star,
            sigma1: low.sigma1,
            sigma_r: low.sigma_r,
            alpha_actual: low.alpha_actual,
            rank,
            beta,
        })
    }

    /// Builds truth from caller-supplied matrices, measuring the spectrum.
    pub fn from_parts(x_star: DenseMatrix, s_star: DenseMatrix, rank: usize, beta: f64) -> Result<Self> {
        x_star.ensure_same_shape(&s_star, "ground truth")?;
        let svd = svd_r(&x_star, rank)?;
        Ok(Self {
            sigma1: svd.singular_values[0],
            sigma_r: svd.singular_values[rank - 1],
            alpha_actual: measure_incoherence(&x_star, rank)?,
            s_count: s_star.nnz(),
            x_star,
            s_star,
            rank,
            beta,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x_star.shape()
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma1 / self.sigma_r
    }

    /// Balanced factors `U* = Ū*(Σ*)^{1/2}`, `V* = V̄*(Σ*)^{1/2}`.
    pub fn star_factors(&self) -> Result<FactorPair> {
        let (u, v) = svd_r(&self.x_star, self.rank)?.balanced_factors();
        FactorPair::new(u, v)
    }

    /// Checks the planted invariants: numerical rank of `X*`, and the support
    /// caps of `S*` (`nnz ≤ s_count`, at most `⌈1.5·β·d⌉` per row and column).
    pub fn validate(&self) -> Result<()> {
        let (d1, d2) = self.shape();
        if self.rank < d1.min(d2) {
            let svd = svd_r(&self.x_star, self.rank + 1)?;
            let tail = svd.singular_values[self.rank] / svd.singular_values[0];
            if tail > 1e-10 {
                return Err(Error::Numerical(format!(
                    "X* is not numerically rank {}: σ_(r+1)/σ₁ = {tail:e}",
                    self.rank
                )));
            }
        }
        if self.s_star.nnz() > self.s_count {
            return Err(Error::parameter("s_count", "S* exceeds its sparsity budget"));
        }
        let row_cap = ceil_count(SPARSE_ROW_CAP_FACTOR * self.beta, d2);
        let col_cap = ceil_count(SPARSE_ROW_CAP_FACTOR * self.beta, d1);
        if (0..d1).any(|i| self.s_star.row_nnz(i) > row_cap)
            || (0..d2).any(|j| self.s_star.col_nnz(j) > col_cap)
        {
            return Err(Error::parameter("beta", "S* exceeds its row/column support cap"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_separates_streams() {
        assert_ne!(derive_seed(42, 1), derive_seed(42, 2));
        assert_ne!(derive_seed(1, 7), derive_seed(2, 7));
        assert_eq!(derive_seed(5, 5), derive_seed(5, 5));
    }

    #[test]
    fn full_rank_lowrank_sample() {
        let low = gen_lowrank(6, 4, 4, 3).unwrap();
        assert!(low.sigma_r > 0.0);
        assert!(low.alpha_actual >= 1.0 - 1e-12);
        assert!(gen_lowrank(6, 4, 5, 3).is_err());
        assert!(gen_lowrank(6, 4, 0, 3).is_err());
    }

    #[test]
    fn generators_are_seed_deterministic() {
        assert_eq!(gen_lowrank(10, 8, 2, 9).unwrap(), gen_lowrank(10, 8, 2, 9).unwrap());
        assert_eq!(
            gen_sparse(10, 8, 0.2, 1.0, 9).unwrap(),
            gen_sparse(10, 8, 0.2, 1.0, 9).unwrap()
        );
        assert_ne!(
            gen_sparse(10, 8, 0.2, 1.0, 9).unwrap(),
            gen_sparse(10, 8, 0.2, 1.0, 10).unwrap()
        );
    }

    #[test]
    fn tiny_beta_may_be_empty_and_bad_beta_errors() {
        let s = gen_sparse(5, 5, 1e-6, 1.0, 1).unwrap();
        assert!(s.nnz() <= 1);
        assert!(gen_sparse(5, 5, 0.0, 1.0, 1).is_err());
        assert!(gen_sparse(5, 5, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn sensing_inner_product_by_hand() {
        let x = DenseMatrix::identity(2);
        let s = DenseMatrix::zeros(2, 2);
        let prob = gen_sensing(&x, &s, 3, 0.0, 11).unwrap();
        for i in 0..3 {
            let a = prob.sensing_matrix(i);
            assert_eq!(prob.measurements()[i], a[(0, 0)] + a[(1, 1)]);
        }
        assert!(gen_sensing(&x, &s, 0, 0.0, 1).is_err());
        assert!(gen_sensing(&x, &s, 1, -1.0, 1).is_err());
    }

    #[test]
    fn full_noiseless_rpca_observes_sum() {
        let x = DenseMatrix::from_fn(4, 3, |i, j| (i + j) as f64);
        let s = DenseMatrix::from_fn(4, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let prob = gen_rpca(&x, &s, 1.0, 0.0, 2).unwrap();
        assert_eq!(prob.observed(), &x.add(&s).unwrap());
        assert!(prob.mask().iter().all(|&b| b));
        assert_eq!(prob.observation_rate(), 1.0);
        assert!(gen_rpca(&x, &s, 0.0, 0.0, 2).is_err());
    }

    #[test]
    fn planted_truth_validates() {
        let truth = GroundTruth::plant(30, 20, 2, 0.1, 2.0, 4).unwrap();
        truth.validate().unwrap();
        assert_eq!(truth.s_count, truth.s_star.nnz());
        let z = truth.star_factors().unwrap();
        let back = z.product().unwrap();
        assert!(back.sub(&truth.x_star).unwrap().max_abs() < 1e-9);
    }
}
