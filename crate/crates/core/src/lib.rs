//! Desk-scale simulator of a quantum Cheshire cat weak-measurement experiment.
//!
//! The crate is organized around the stages of the experiment:
//!
//! - [`hilbert`] — labeled finite-dimensional Hilbert spaces: state vectors,
//!   operators, tensor products, projectors, expectations.
//! - [`scenario`] — the pre/post-selected interferometer itself: state
//!   preparation, the controlled-rotation coupling, weak values, and
//!   virtual-path transition-amplitude decompositions.
//! - [`photonics`] — second-quantized two-photon model of the PPBS-based
//!   controlled-Z gate, including Hong-Ou-Mandel interference and partial
//!   distinguishability.
//! - [`experiment`] — coupling-strength sweeps with Poissonian counting
//!   noise and deterministic seeded RNG substreams.
//! - [`analysis`] — weighted polynomial least squares and weak-value
//!   extraction from sweep data.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod photonics;
pub mod scenario;

pub use error::CoreError;

/// Tolerance for unitarity / hermiticity flag verification.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Tolerance for scalar and elementwise equality checks.
pub const EQ_TOL: f64 = 1e-12;
