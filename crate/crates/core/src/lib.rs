//! Low-rank plus sparse matrix recovery.
//!
//! Recovers a rank-`r` matrix `X*` and a sparse corruption `S*` from either
//! linear measurements (robust matrix sensing) or entrywise observations
//! (robust PCA, fully or partially observed). The solver works on the
//! factorization `X = U·Vᵀ` and keeps `S` sparse with a hard-threshold plus
//! row/column truncation step.
//!
//! ```no_run
//! use lrsparse::models::ObservationModel;
//! use lrsparse::solver::{solve, InitConfig, SolverConfig};
//! use lrsparse::synthetic::{gen_rpca, GroundTruth};
//!
//! let truth = GroundTruth::plant(100, 100, 5, 0.05, 5.0, 7)?;
//! let model = ObservationModel::Rpca(gen_rpca(&truth.x_star, &truth.s_star, 1.0, 0.0, 8)?);
//! let cfg = SolverConfig::new(5, truth.s_count, 0.05, truth.alpha_actual);
//! let solution = solve(&model, &cfg, &InitConfig::default(), Some(&truth))?;
//! println!("{:?}", solution.trace.last());
//! # Ok::<(), lrsparse::Error>(())
//! ```

pub mod error;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod operators;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
pub use numerics::DenseMatrix;
