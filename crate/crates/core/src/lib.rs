//! Trapped-ion native QAOA toolkit.
//!
//! The crate follows the data flow of an ion-native variational experiment:
//!
//! * [`ionchain`] turns trap parameters into phonon modes, Lamb-Dicke factors
//!   and the coupling base `C_ij` that fixes the available Ising interactions.
//! * [`problems`] builds diagonal cost Hamiltonians (Sherrington-Kirkpatrick
//!   instances and the GHZ state-preparation projector).
//! * [`simulator`] prepares ion-native and standard QAOA states exactly.
//! * [`optimizers`] holds the classical minimizers with exact evaluation counting.
//! * [`heuristic`] searches problem-specific hyperparameters `A*` by block
//!   coordinate descent and picks a landscape rescaling factor `alpha*`.
//! * [`pipeline`] runs layerwise training and multi-cycle benchmark campaigns.
//! * [`analysis`] computes expressibility and subspace-locking diagnostics.

// Negated comparisons reject NaN inputs along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod error;
pub mod heuristic;
pub mod ionchain;
pub mod linalg;
pub mod optimizers;
pub mod pipeline;
pub mod problems;
pub mod report;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

/// Version string embedded into every output file.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
