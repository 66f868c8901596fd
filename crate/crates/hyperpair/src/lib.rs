//! Conjugacy invariants and constructive classification of pairs of
//! loxodromic isometries of complex and quaternionic hyperbolic space.
//!
//! The library works in the Siegel model `F^{n,1}` with `F` the complex
//! numbers or the quaternions, always stored as quaternions.

pub mod cli;
mod dd;
pub mod error;
pub mod genericity;
pub mod gram;
pub mod invariants;
pub mod io;
pub mod pair;
pub mod quat;
pub mod space;
pub mod spectral;
pub mod twistbend;

pub use error::{Error, Result};
pub use quat::Quaternion;
pub use pair::{Mode, Pair};
pub use space::{Field, HMatrix, HVector, HermitianSpace};
