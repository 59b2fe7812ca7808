//! Thresholds and negative-eigenvalue counts for the Friedrichs-type operator
//! `H = x^{2l} + gamma V` on `L^2(0, inf)`, where `V` has kernel `v(xy)`.
//!
//! The crate has two halves. [`mellin`] and [`predict`] evaluate closed-form
//! thresholds and counts; [`galerkin`] recomputes the counts numerically from
//! the quadratic form so the two can be compared.

pub mod galerkin;
pub mod linalg;
pub mod mellin;
pub mod predict;
pub mod quad;
pub mod scalar;
pub mod specfun;

pub use scalar::Scalar;

pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;
pub type SymMatrix64 = linalg::SymMatrix<f64>;
pub type SymMatrix32 = linalg::SymMatrix<f32>;
pub type GaussLegendre64 = quad::GaussLegendre<f64>;
