//! Localized scalar quantum fields as particle detectors.
//!
//! The crate builds Klein-Gordon-normalized mode bases for a scalar field
//! held together by a confining potential, couples one accessible mode of
//! that field to a free field in 3+1 Minkowski space, computes the reduced
//! state of the accessible mode at second order in the coupling, and checks
//! that result against exact Gaussian evolution of a truncated mode network.
//!
//! Start from the `examples/` directory: each example exercises one major
//! capability end to end.

pub mod error;
pub mod kernel;
pub mod oracle;
pub mod perturbation;
pub mod quad;
pub mod scenario;
pub mod smearing;
pub mod special;
pub mod spectrum;
pub mod tridiag;

pub use error::{LocfieldError, Result};
