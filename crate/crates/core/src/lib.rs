//! Internal-stability analysis for diffusively coupled LTI multi-agent systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`ratpoly`]: real polynomials, rational functions and rational matrices.
//! * [`ssreal`]: state-space realizations, Kalman reduction, poles, zeros and
//!   their direction subspaces.
//! * [`graphnet`]: interaction graphs and coupling matrices.
//! * [`coprime`]: doubly-coprime factorizations and denominator-kernel tests.
//! * [`masanalysis`]: controller assembly, four-block closed loops, the
//!   shared-unstable-direction obstruction and cancellation certificates.
//! * [`simulate`]: exact zero-order-hold simulation of closed loops.

pub mod coprime;
pub mod error;
pub mod graphnet;
pub mod linalg;
pub mod masanalysis;
pub mod ratpoly;
pub mod simulate;
pub mod ssreal;
pub mod tol;

pub use error::{Error, Result};
pub use nalgebra::Complex;
pub use tol::Tolerances;

/// Complex double, the scalar of every spectral quantity in the crate.
pub type C64 = Complex<f64>;
