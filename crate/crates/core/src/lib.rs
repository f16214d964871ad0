//! Synthesis of conformal minimal immersions and harmonic maps of circular
//! planar domains into ℝⁿ from split Weierstrass data, with exponential
//! period correction, labyrinth-driven metric amplification over a finite
//! exhaustion, and audits of the resulting invariants.

pub mod audit;
pub mod builder;
pub mod cli;
pub mod config;
pub mod corrector;
pub mod domain;
pub mod error;
pub mod geodesic;
pub mod holo;
pub mod labyrinth;
pub mod weierstrass;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C = num_complex::Complex64;

/// The imaginary unit.
pub const I: C = C::new(0.0, 1.0);
