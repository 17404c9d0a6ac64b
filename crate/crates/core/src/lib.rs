//! Graph-theoretic modeling of beyond-diagonal reconfigurable intelligent
//! surfaces (BD-RIS).
//!
//! * [`topology`] builds circuit-topology graphs and checks the
//!   optimal-architecture condition.
//! * [`network`] maps susceptance matrices to scattering matrices.
//! * [`channel`] samples multiuser MIMO channels.
//! * [`reconstruct`] recovers a sparse susceptance matrix that reproduces
//!   a fully-connected scattering behavior.
//! * [`optimize`] evaluates and locally optimizes utilities.
//! * [`cli`] is the command-line front end.

pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod network;
pub mod optimize;
pub mod reconstruct;
pub mod topology;

pub use error::{Error, Result};
