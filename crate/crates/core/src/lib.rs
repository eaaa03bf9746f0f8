//! Operation-triggered quantum clock synchronization.
//!
//! The crate simulates the protocol at the level of per-node Fock states,
//! cross-checks it against a dense qubit statevector, and provides the
//! Fisher-information and maximum-likelihood machinery used to quantify the
//! achievable synchronization precision.
//!
//! Module map:
//! - [`fock`]: sparse Fock-basis pure states and the standard probe states.
//! - [`dynamics`]: free evolution, collective NOT triggers, phase imprinting.
//! - [`protocols`]: event-driven operation-triggered protocol and the
//!   measurement-triggered W-state protocol.
//! - [`oracle`]: brute-force dense statevector simulator for validation.
//! - [`metrology`]: quantum Fisher information and Cramér-Rao bounds.
//! - [`estimation`]: readout sampling, MLE and Monte-Carlo deviation.
//! - [`cli`]: experiment runner behind the `qcs` binary.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod metrology;
pub mod oracle;
pub mod protocols;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
