//! Finite-size bounds on extractable work for quantum lattice systems.
//!
//! The crate evaluates both terms of the ergotropy bound (local athermality
//! and the entropy change weighted by canonical energies), checks the exact
//! finite-size inequality per channel, and provides the supporting thermo,
//! eigenstate-thermalization and dynamics diagnostics.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ergotropy;
pub mod error;
pub mod eth;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod report;
pub mod states;
pub mod thermo;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianOperator, ModelSpec, TermKey};
pub use lattice::{Boundary, Lattice, Partition, PartitionMode, Site};
pub use states::QuantumState;
