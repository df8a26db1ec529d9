//! Simulation and analysis of bipartite spin dynamics whose output
//! amplitudes encode matrix permanents.
//!
//! The crate covers the four couplings `H1`–`H4`, exact and Krylov time
//! evolution, the moment/permanent identities, permanent extraction by robust
//! polynomial regression, anticoncentration Monte-Carlo, and Trotter circuit
//! errors and gate counts.

pub mod anticon;
pub mod domain;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod hamiltonian;
pub mod hardness;
pub mod permanent;
pub mod polyfit;
pub mod trotter;

pub use domain::*;
pub use error::{Error, Result};
pub use exec::Execution;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
