//! Simulation of adiabatic ground-state search for Diophantine equations on
//! truncated bosonic Fock spaces, with exact integer cross-checks.

pub mod adiabatic;
pub mod cli;
pub mod decision;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod polynomial;

pub use error::{Error, Result};
