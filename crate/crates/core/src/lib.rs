//! Classical desk-scale simulation of parity recovery for hidden reflections
//! in dihedral groups of order 2·2^n.
//!
//! The pipeline mirrors the quantum procedure end to end: Fourier-sampled
//! phase states are tensored into groups, a phase filter collapses the data
//! register to a sparse transition state, the surviving basis labels are
//! recovered classically by solving low-density subset sum instances with an
//! exact LLL-based solver, and a two-level measurement reveals the parity of
//! the hidden slope.

pub mod dihedral;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod numeric;
pub mod phase;
pub mod pipeline;
pub mod rng;
pub mod subset_sum;
pub mod transition;

pub use error::{Error, Result};
