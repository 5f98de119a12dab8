//! Richardson's model and the contact process, with and without stirring,
//! on finite boxes of `ℤᵈ` and on truncated homogeneous trees.
//!
//! The dynamics are driven by a seeded graphical construction
//! ([`randomness`]); the same Poisson field feeds the monotone couplings of
//! [`coupling`], the particle system of [`particles`] and the Monte Carlo
//! estimators. [`analysis`] and [`tree_survival`] hold the exact,
//! enumeration-based companions (frontier counts, drifts, thresholds).

pub mod analysis;
pub mod cli;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod particles;
pub mod randomness;
pub mod stats;
pub mod topology;
pub mod tree_survival;

pub use error::{Error, Result};
