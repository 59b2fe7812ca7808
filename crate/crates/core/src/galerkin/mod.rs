//! Galerkin verification of the negative counts.
//!
//! Hats on a geometric grid discretize the quadratic form of `x^{2l} + gamma V`.
//! The number of eigenvalues of the pencil below `-epsilon` comes from the
//! inertia of a symmetric indefinite factorization. Terms `v_k (xy)^{r_k}` with
//! `r_k < l - 1/2` are large on wide windows and enter as a border of the matrix.

mod assemble;
mod grid;
mod verdict;

use thiserror::Error;

pub use assemble::{
    assemble_gram, assemble_h0, assemble_v, hat_convolution, hat_moment, negative_inertia_count, FormMatrices,
    LowRankTerm,
};
pub use grid::{build_grid, default_sweep, GridSpec};
pub use verdict::{classify, refinement_verdict, GalerkinReport, RefinementRow, Verdict, DEFAULT_EPSILONS, EIGEN_CHECK_CELLS};

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum GalerkinError {
    #[error("grid: {0}")]
    Spec(String),
    #[error("kernel still oscillating without decay at tau = {tau}")]
    Oscillation { tau: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("i/o: {0}")]
    Io(String),
}
