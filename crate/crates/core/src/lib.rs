// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod grid;
pub mod par;

pub use error::{Error, Result};
pub use field::{integrate, spectral_derivative, RealField, SpectralField, WaveField};
pub use grid::Grid1D;
pub mod solver;
pub mod propagator;
pub mod sampling;
pub mod bohm;
pub mod stochastic;
pub mod algebra;
