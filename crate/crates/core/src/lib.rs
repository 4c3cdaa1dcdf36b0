//! Random-matrix ensembles for disordered spin Hamiltonians, eigenstate
//! entanglement statistics, complexity parameters, and a Langevin simulator
//! for Schmidt eigenvalues.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and parallel drivers live in the `qent` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod complexity;
pub mod dynamics;
pub mod entangle;
pub mod error;
pub mod linalg;
pub mod math;
pub mod models;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
