//! Observation models and their quadratic sample losses.
//!
//! Both losses depend on the decision variables only through the sum
//! `m = X + S`, so one residual adjoint serves as the gradient with respect to
//! either component.

use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix};

/// Linear measurements `yᵢ = ⟨Aᵢ, X* + S*⟩ (+ noise)`.
///
/// The sensing matrices are kept as one contiguous `n × (d₁·d₂)` design, each
/// row holding one `Aᵢ` in row-major order. Memory is `n·d₁·d₂` doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingProblem {
    d1: usize,
    d2: usize,
    design: Vec<f64>,
    measurements: Vec<f64>,
}

impl SensingProblem {
    pub fn new(sensing_matrices: &[DenseMatrix], measurements: Vec<f64>) -> Result<Self> {
        let first = sensing_matrices
            .first()
            .ok_or_else(|| Error::dimension("sensing problem needs at least one matrix"))?;
        let (d1, d2) = first.shape();
        if sensing_matrices.iter().any(|a| a.shape() != (d1, d2)) {
            return Err(Error::dimension("sensing matrices must share dimensions"));
        }
        let mut design = Vec::with_capacity(sensing_matrices.len() * d1 * d2);
        for a in sensing_matrices {
            design.extend_from_slice(a.as_slice());
        }
        Self::from_design(d1, d2, design, measurements)
    }

    /// Builds directly from a stacked row-major design of `n` matrices.
    pub fn from_design(d1: usize, d2: usize, design: Vec<f64>, measurements: Vec<f64>) -> Result<Self> {
        let n = measurements.len();
        if n == 0 || d1 == 0 || d2 == 0 {
            return Err(Error::dimension("empty sensing problem"));
        }
        if design.len() != n * d1 * d2 {
            return Err(Error::dimension(format!(
                "design holds {} values, expected {n} matrices of {d1}x{d2}",
                design.len()
            )));
        }
        if design.iter().chain(&measurements).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sensing data contains non-finite values".into()));
        }
        Ok(Self {
            d1,
            d2,
            design,
            measurements,
        })
    }

    pub fn n(&self) -> usize {
        self.measurements.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    /// `Aᵢ` as a flat row-major slice.
    pub fn sensing_row(&self, i: usize) -> &[f64] {
        let len = self.d1 * self.d2;
        &self.design[i * len..(i + 1) * len]
    }

    pub fn sensing_matrix(&self, i: usize) -> DenseMatrix {
        DenseMatrix::new(self.d1, self.d2, self.sensing_row(i).to_vec())
            .expect("validated at construction")
    }

    /// `A(m) = (⟨A₁, m⟩, …, ⟨Aₙ, m⟩)`.
    pub fn apply(&self, m: &DenseMatrix) -> Vec<f64> {
        (0..self.n())
            .map(|i| dot(self.sensing_row(i), m.as_slice()))
            .collect()
    }

    /// `A*(w) = Σᵢ wᵢ Aᵢ`.
    pub fn adjoint(&self, weights: &[f64]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.d1, self.d2);
        let acc = out.as_mut_slice();
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &a) in acc.iter_mut().zip(self.sensing_row(i)) {
                *o += w * a;
            }
        }
        out
    }
}

/// Entrywise observations of `X* + S* (+ E)` on a mask `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcaProblem {
    observed: DenseMatrix,
    mask: Vec<bool>,
    p: f64,
}

impl RpcaProblem {
    /// Fully observed problem: every cell in `Ω`, `p = 1`.
    pub fn full(observed: DenseMatrix) -> Self {
        let mask = vec![true; observed.len()];
        Self {
            observed,
            mask,
            p: 1.0,
        }
    }

    /// Partially observed problem. `mask` is row-major; `p` is the observed
    /// fraction and is recomputed from the mask. Unobserved cells of
    /// `observed` are zeroed.
    pub fn partial(mut observed: DenseMatrix, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != observed.len() {
            return Err(Error::dimension(format!(
                "mask has {} cells, matrix has {}",
                mask.len(),
                observed.len()
            )));
        }
        let count = mask.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::parameter("mask", "no observed cells"));
        }
        for (v, &keep) in observed.as_mut_slice().iter_mut().zip(&mask) {
            if !keep {
                *v = 0.0;
            }
        }
        let p = count as f64 / mask.len() as f64;
        Ok(Self { observed, mask, p })
    }

    pub fn observed(&self) -> &DenseMatrix {
        &self.observed
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn observation_rate(&self) -> f64 {
        self.p
    }

    pub fn shape(&self) -> (usize, usize) {
        self.observed.shape()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationModel {
    Sensing(SensingProblem),
    Rpca(RpcaProblem),
}

/// Loss value and gradient at one point, sharing a single residual pass.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub grad: DenseMatrix,
}

impl ObservationModel {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ObservationModel::Sensing(p) => p.shape(),
            ObservationModel::Rpca(p) => p.shape(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ObservationModel::Sensing(_) => "sensing",
            ObservationModel::Rpca(p) if p.mask.iter().all(|&b| b) => "rpca_full",
            ObservationModel::Rpca(_) => "rpca_partial",
        }
    }

    fn check_shape(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.shape() {
            let (d1, d2) = self.shape();
            return Err(Error::dimension(format!(
                "model is {d1}x{d2}, argument is {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    /// `L(m)`: `(1/2n)‖y − A(m)‖²` or `(1/2p)Σ_Ω (m − Y)²`.
    pub fn loss(&self, m: &DenseMatrix) -> Result<f64> {
        Ok(self.evaluate(m)?.loss)
    }

    /// `∇L(m)`: `−(1/n)A*(y − A(m))` or `(1/p)P_Ω(m − Y)`.
    pub fn grad(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.evaluate(m)?.grad)
    }

    pub fn evaluate(&self, m: &DenseMatrix) -> Result<LossEval> {
        self.check_shape(m)?;
        Ok(match self {
            ObservationModel::Sensing(prob) => {
                let n = prob.n() as f64;
                let fitted = prob.apply(m);
                // Weights -(y - A(m))/n, i.e. (A(m) - y)/n.
                let mut sq = 0.0;
                let weights: Vec<f64> = fitted
                    .iter()
                    .zip(&prob.measurements)
                    .map(|(&f, &y)| {
                        let r = y - f;
                        sq += r * r;
                        -r / n
                    })
                    .collect();
                LossEval {
                    loss: sq / (2.0 * n),
                    grad: prob.adjoint(&weights),
                }
            }
            ObservationModel::Rpca(prob) => {
                let inv_p = 1.0 / prob.p;
                let mut grad = DenseMatrix::zeros(m.rows(), m.cols());
                let mut sq = 0.0;
                for (((g, &x), &y), &seen) in grad
                    .as_mut_slice()
                    .iter_mut()
                    .zip(m.as_slice())
                    .zip(prob.observed.as_slice())
                    .zip(&prob.mask)
                {
                    if seen {
                        let r = x - y;
                        sq += r * r;
                        *g = inv_p * r;
                    }
                }
                LossEval {
                    loss: sq * inv_p / 2.0,
                    grad,
                }
            }
        })
    }

    /// Gradient of `F(U, V, S) = L(UVᵀ + S) + ⅛‖UᵀU − VᵀV‖²_F` in `U` and `V`.
    pub fn grad_factored(
        &self,
        u: &DenseMatrix,
        v: &DenseMatrix,
        s: &DenseMatrix,
    ) -> Result<(DenseMatrix, DenseMatrix)> {
        let m = u.matmul_t(v)?.add(s)?;
        let g = self.grad(&m)?;
        factored_gradient(&g, u, v)
    }

    /// `F(U, V, S) = L(UVᵀ + S) + ⅛‖UᵀU − VᵀV‖²_F`.
    pub fn objective_f(&self, u: &DenseMatrix, v: &DenseMatrix, s: &DenseMatrix) -> Result<f64> {
        let m = u.matmul_t(v)?.add(s)?;
        Ok(self.loss(&m)? + balance_penalty(u, v)?)
    }
}

/// `UᵀU − VᵀV`.
pub(crate) fn gram_gap(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if u.cols() != v.cols() {
        return Err(Error::dimension(format!(
            "factor ranks differ: {} vs {}",
            u.cols(),
            v.cols()
        )));
    }
    u.t_matmul(u)?.sub(&v.t_matmul(v)?)
}

/// `⅛‖UᵀU − VᵀV‖²_F`.
pub fn balance_penalty(u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    Ok(gram_gap(u, v)?.frobenius_norm_sq() / 8.0)
}

/// Factor gradients given the loss gradient `g` at `UVᵀ + S`:
/// `(g·V + ½U(UᵀU − VᵀV), gᵀ·U + ½V(VᵀV − UᵀU))`.
pub(crate) fn factored_gradient(
    g: &DenseMatrix,
    u: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if g.shape() != (u.rows(), v.rows()) {
        return Err(Error::dimension(format!(
            "gradient is {}x{}, factors imply {}x{}",
            g.rows(),
            g.cols(),
            u.rows(),
            v.rows()
        )));
    }
    let gap = gram_gap(u, v)?;
    let mut grad_u = g.matmul(v)?;
    grad_u.axpy(0.5, &u.matmul(&gap)?)?;
    let mut grad_v = g.t_matmul(u)?;
    grad_v.axpy(-0.5, &v.matmul(&gap)?)?;
    Ok((grad_u, grad_v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_sensing() -> ObservationModel {
        let a = DenseMatrix::identity(2);
        ObservationModel::Sensing(SensingProblem::new(&[a], vec![3.0]).unwrap())
    }

    #[test]
    fn sensing_loss_by_hand() {
        let model = hand_sensing();
        let loss = model.loss(&DenseMatrix::identity(2)).unwrap();
        assert!((loss - 0.5).abs() < 1e-15);
        // residual 1, gradient −(1/1)·1·A₁
        let g = model.grad(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(g, DenseMatrix::identity(2).scale(-1.0));
    }

    #[test]
    fn zero_residual_gives_zero_loss_and_gradient() {
        let y = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let model = ObservationModel::Rpca(RpcaProblem::full(y.clone()));
        assert_eq!(model.loss(&y).unwrap(), 0.0);
        assert_eq!(model.grad(&y).unwrap(), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn rpca_full_gradient_is_residual() {
        let y = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let gap = DenseMatrix::from_rows(&[&[0.25, 1.0], &[-3.0, 0.0]]).unwrap();
        let model = ObservationModel::Rpca(RpcaProblem::full(y.clone()));
        let g = model.grad(&y.add(&gap).unwrap()).unwrap();
        assert!(g.sub(&gap).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn partial_mask_zeroes_unobserved_and_sets_rate() {
        let y = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let p = RpcaProblem::partial(y, vec![true, false, false, true]).unwrap();
        assert_eq!(p.observed().as_slice(), &[1.0, 0.0, 0.0, 4.0]);
        assert_eq!(p.observation_rate(), 0.5);
        assert!(RpcaProblem::partial(DenseMatrix::zeros(2, 2), vec![false; 4]).is_err());
        assert!(RpcaProblem::partial(DenseMatrix::zeros(2, 2), vec![true; 3]).is_err());
    }

    #[test]
    fn partial_with_full_mask_matches_full_bitwise() {
        let y = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 - 1.3) * (j as f64 + 0.7));
        let m = DenseMatrix::from_fn(3, 4, |i, j| (i * j) as f64 * 0.1 - 0.4);
        let full = ObservationModel::Rpca(RpcaProblem::full(y.clone()));
        let partial = ObservationModel::Rpca(RpcaProblem::partial(y, vec![true; 12]).unwrap());
        assert_eq!(full.loss(&m).unwrap().to_bits(), partial.loss(&m).unwrap().to_bits());
        assert_eq!(full.grad(&m).unwrap(), partial.grad(&m).unwrap());
    }

    #[test]
    fn factored_gradient_special_cases() {
        let y = DenseMatrix::zeros(3, 2);
        let model = ObservationModel::Rpca(RpcaProblem::full(y));
        let u = DenseMatrix::zeros(3, 1);
        let v = DenseMatrix::from_rows(&[&[1.0], &[2.0]]).unwrap();
        let s = DenseMatrix::zeros(3, 2);
        let (gu, gv) = model.grad_factored(&u, &v, &s).unwrap();
        assert_eq!(gu, DenseMatrix::zeros(3, 1));
        // ½·V·(VᵀV) with VᵀV = 5
        assert_eq!(gv, v.scale(2.5));
    }

    #[test]
    fn objective_adds_balance_penalty() {
        // zero loss, UᵀU − VᵀV = diag(2, 0)
        let u = DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        let v = DenseMatrix::zeros(2, 2);
        let s = DenseMatrix::zeros(2, 2);
        let model = ObservationModel::Rpca(RpcaProblem::full(DenseMatrix::zeros(2, 2)));
        assert!((model.objective_f(&u, &v, &s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = hand_sensing();
        assert!(matches!(
            model.loss(&DenseMatrix::zeros(3, 2)),
            Err(Error::Dimension(_))
        ));
        assert!(SensingProblem::new(&[DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 3)], vec![0.0, 0.0]).is_err());
        assert!(SensingProblem::new(&[DenseMatrix::zeros(2, 2)], vec![0.0, 0.0]).is_err());
    }
}
