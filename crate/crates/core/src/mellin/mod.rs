//! Mellin transform, the kernel symbol and the coupling thresholds.

mod kernel;
mod sigma;
mod symbol;
mod transform;

use thiserror::Error;

pub use kernel::{bessel_coefficient, bessel_pq, KernelExpansion, KernelSpec, TabulatedKernel, RESONANCE_TOL};
pub(crate) use sigma::on_ladder;
pub use sigma::{sigma_bes5, sigma_channel, sigma_cs, sigma_cs_reflection, sigma_l, Kind};
pub use symbol::{
    beta_l, mellin_symbol_bessel, mellin_symbol_quadrature, residue_at_pole, sample_symbol, symbol_extrema,
    symbol_extrema_with, ExtremaSearch, SymbolExtrema, SymbolSamples, SymbolRoute, POLE_PROXIMITY,
};
pub use transform::{mellin_transform, mellin_transform_at, verify_convolution, ConvolutionGrid, MellinSamples};

use crate::specfun::SpecfunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MellinError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("Re z = {re} outside the continuation band (0, {limit})")]
    Band { re: f64, limit: f64 },
    #[error("Re z = {re} within {tol} of the pole line {pole}")]
    PoleProximity { re: f64, pole: f64, tol: f64 },
    #[error("l = {l} is resonant with exponent r_{index} = {exponent}")]
    Resonance { l: f64, index: usize, exponent: f64 },
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("{what} at l = {l} is outside the floating-point range")]
    Overflow { what: &'static str, l: f64 },
    #[error(transparent)]
    Special(#[from] SpecfunError),
}
