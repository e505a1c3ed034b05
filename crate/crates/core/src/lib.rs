//! Exponential functionals of subordinators.
//!
//! For a drift-free subordinator ξ with Lévy measure π and Laplace exponent φ,
//! this crate evaluates the large-t behaviour of the tail and density of
//! I = ∫₀^∞ e^{−ξ_r} dr and checks it against a fixed-point solver for the
//! density, exact moments, and Monte Carlo simulation.

pub mod asymptotics;
pub mod error;
pub mod fixed_point;
pub mod levy;
pub mod model_file;
pub mod monte_carlo;
pub mod parallel;
pub mod psi;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
