//! Exact finite-size laboratory for automorphism dynamics of qudit chains.

pub mod error;
pub mod dynamics;
pub mod gns;
pub mod hamiltonians;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod obstruction;
pub mod spectra;
pub mod weyl;

pub use error::{LabError, Result};
