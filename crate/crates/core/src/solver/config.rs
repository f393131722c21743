use crate::error::{Error, Result};

/// Tunables of the gradient-descent phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target rank `r`.
    pub rank: usize,
    /// Sparsity budget `s`.
    pub s_count: usize,
    /// Per-row/column corruption fraction `β`.
    pub beta: f64,
    /// Incoherence parameter `α`; sets the row-norm bounds of the factors.
    pub alpha: f64,
    /// Truncation multiplier `γ`; the sparse iterate keeps a `γβ` fraction per row/column.
    pub gamma: f64,
    /// Hard-threshold multiplier `γ'`; the sparse iterate keeps `⌊γ's⌋` entries.
    pub gamma_prime: f64,
    /// Factor step coefficient: `η = eta_coeff / σ̂₁`.
    pub eta_coeff: f64,
    /// Sparse step size `τ`.
    pub tau: f64,
    /// Iteration budget `T`.
    pub max_iters: usize,
    /// Early stop once the objective moves by at most `tol` (relative) over
    /// [`STOP_WINDOW`](super::STOP_WINDOW) iterations.
    pub tol: f64,
    /// Record per-iteration wall-clock time in the trace.
    pub record_timing: bool,
}

impl SolverConfig {
    pub fn new(rank: usize, s_count: usize, beta: f64, alpha: f64) -> Self {
        Self {
            rank,
            s_count,
            beta,
            alpha,
            gamma: 2.0,
            gamma_prime: 2.0,
            eta_coeff: 0.5,
            tau: 0.5,
            max_iters: 500,
            tol: 1e-10,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::parameter("rank", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::parameter(
                "beta",
                format!("must lie in (0, 1), got {}", self.beta),
            ));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::parameter(
                "alpha",
                format!("must be finite and at least 1, got {}", self.alpha),
            ));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::parameter(
                "gamma",
                format!("must exceed 1, got {}", self.gamma),
            ));
        }
        if !(self.gamma_prime > 1.0 && self.gamma_prime.is_finite()) {
            return Err(Error::parameter(
                "gamma_prime",
                format!("must exceed 1, got {}", self.gamma_prime),
            ));
        }
        if self.gamma * self.beta > 1.0 {
            return Err(Error::parameter(
                "gamma",
                format!("gamma * beta = {} exceeds 1", self.gamma * self.beta),
            ));
        }
        positive("eta_coeff", self.eta_coeff)?;
        positive("tau", self.tau)?;
        if self.max_iters == 0 {
            return Err(Error::parameter("max_iters", "must be at least 1"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::parameter(
                "tol",
                format!("must be finite and nonnegative, got {}", self.tol),
            ));
        }
        Ok(())
    }
}

/// Tunables of the initialization phase.
#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    /// Sparsity multiplier `λ`; the sparse iterate keeps `⌊λs⌋` entries.
    pub lambda: f64,
    /// Rank multiplier `λ'`; the low-rank iterate is projected to rank `⌈λ'r⌉`.
    pub lambda_prime: f64,
    /// Low-rank step `η'`.
    pub eta_prime: f64,
    /// Sparse step `τ'`.
    pub tau_prime: f64,
    /// Iteration count `L`.
    pub iters: usize,
    /// `c_ζ` in the clipping level `ζ* = c_ζ·α·r·σ̂₁/√(d₁d₂)`.
    pub zeta_coeff: f64,
    /// Optional condition-number estimate. It does not change `ζ*`, which is
    /// computed from the running spectral norm directly; kept so configs can
    /// carry the value through to outputs.
    pub kappa_hint: Option<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            lambda_prime: 1.0,
            eta_prime: 0.25,
            tau_prime: 0.25,
            iters: 30,
            zeta_coeff: 1.5,
            kappa_hint: None,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::parameter(
                "lambda",
                format!("must exceed 1, got {}", self.lambda),
            ));
        }
        if !(self.lambda_prime >= 1.0 && self.lambda_prime.is_finite()) {
            return Err(Error::parameter(
                "lambda_prime",
                format!("must be at least 1, got {}", self.lambda_prime),
            ));
        }
        positive("eta_prime", self.eta_prime)?;
        positive("tau_prime", self.tau_prime)?;
        positive("zeta_coeff", self.zeta_coeff)?;
        if self.iters == 0 {
            return Err(Error::parameter("init_iters", "must be at least 1"));
        }
        if let Some(k) = self.kappa_hint {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(Error::parameter(
                    "kappa_hint",
                    format!("a condition number is at least 1, got {k}"),
                ));
            }
        }
        Ok(())
    }

    /// Rank of the low-rank projection, `⌈λ'·r⌉` capped at `max_rank`.
    pub fn projection_rank(&self, rank: usize, max_rank: usize) -> usize {
        ((self.lambda_prime * rank as f64 - 1e-9).ceil() as usize).clamp(rank, max_rank)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::parameter(
            name,
            format!("must be positive and finite, got {value}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::new(3, 10, 0.1, 2.0).validate().unwrap();
        InitConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut cfg = SolverConfig::new(3, 10, 0.1, 2.0);
        cfg.gamma = 1.0;
        assert!(matches!(cfg.validate(), Err(Error::Parameter { name: "gamma", .. })));
        let mut cfg = SolverConfig::new(3, 10, 0.6, 2.0);
        assert!(matches!(cfg.validate(), Err(Error::Parameter { name: "gamma", .. })));
        cfg.beta = 0.1;
        cfg.tau = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Parameter { name: "tau", .. })));
        let icfg = InitConfig {
            lambda: 1.0,
            ..InitConfig::default()
        };
        assert!(matches!(icfg.validate(), Err(Error::Parameter { name: "lambda", .. })));
    }

    #[test]
    fn projection_rank_follows_lambda_prime() {
        let mut icfg = InitConfig::default();
        assert_eq!(icfg.projection_rank(3, 10), 3);
        icfg.lambda_prime = 1.5;
        assert_eq!(icfg.projection_rank(3, 10), 5);
        assert_eq!(icfg.projection_rank(3, 4), 4);
    }
}
