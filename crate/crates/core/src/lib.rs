//! Numerics for symmetry and symmetry breaking of optimizers in
//! Caffarelli–Kohn–Nirenberg inequalities.
//!
//! [`params`] maps `(d, a, b)` to the exponent, the cylinder data and the
//! region relative to the Felli–Schneider curve. [`profiles`] holds the
//! closed forms (radial optimizer, soliton, self-similar flow solution) and
//! [`discretization`] the grids and operators on the cylinder `R × S^{d-1}`
//! and on log-uniform radial grids. On top of these, [`minimize`] compares
//! radial and nonradial minimization, [`spectrum`] locates the linear
//! stability threshold, [`flow`] runs the fast diffusion flow with its
//! pressure functional, and [`identities`] checks the pointwise identities
//! behind the rigidity argument on seeded random fields.

pub mod config;
pub mod discretization;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod identities;
pub mod json;
pub mod minimize;
pub mod params;
pub mod profiles;
pub mod quadrature;
pub mod spectrum;

pub use error::{CknError, Result};
