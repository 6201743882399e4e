//! Exact counterfactual reasoning over finite structural causal models.
//!
//! The core is generic over a [`Scalar`]: exact work runs on [`Rational`],
//! the randomized oracle and samplers reuse the same code on `f64`. The
//! aliases below name the instantiations used throughout the crate.

pub mod bounds;
pub mod consistency;
pub mod datasets;
pub mod dsl;
pub mod engine;
pub mod model;
pub mod scalar;

pub use scalar::{Rational, Scalar};

/// Model with exact rational exogenous masses.
pub type ExactScm = model::Scm<Rational>;
/// Model with floating-point exogenous masses.
pub type FloatScm = model::Scm<f64>;
pub type ExactDistribution = engine::Distribution<Rational>;
pub type FloatDistribution = engine::Distribution<f64>;
