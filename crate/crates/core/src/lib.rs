//! Calculus of variations on discretized holonomic measures.
//!
//! The ambient manifold is the flat torus `R^d / Z^d`. A point of the phase
//! space `T^nM` carries a base point and `n` fiber vectors; measures are finite
//! clouds of weighted phase points and distributions are finite sums of
//! coordinate derivatives applied to such clouds.
//!
//! Module map:
//!
//! * [`geometry`]: torus points, trigonometric forms, volumes, exterior derivative.
//! * [`measures`]: atomic measures, cell chains, mass, holonomy, homology, mild metric.
//! * [`distributions`]: mild distributions, pairing, tangency checks, stencils,
//!   smoothing and transport recovery.
//! * [`variations`]: horizontal, vertical, transpositional and point variations.
//! * [`lagrangians`]: built-in Lagrangians with analytic derivatives.
//! * [`optimize`]: action minimization by linear programming and criticality scans.
//! * [`analysis`]: weak-KAM fits, Hamilton-Jacobi residuals, energy constants.

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod lagrangians;
pub mod measures;
pub mod numeric;
pub mod optimize;
pub mod variations;

pub use error::{Error, Result};
