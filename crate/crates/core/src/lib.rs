//! Time-optimal control of two coupled qubits under time-varying couplings.
//!
//! The crate computes canonical (Cartan) parameters of two-qubit gates and
//! Hamiltonians, decides reachability and minimum times from majorization
//! conditions on the accumulated coupling, synthesizes explicit schedules of
//! local gates interleaved with the drift, and checks them by direct
//! time-ordered propagation.

// Negated comparisons are used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod gates;
pub mod majorization;
pub mod profiles;
pub mod quadrature;
pub mod random;
pub mod reachability;
pub mod simulator;
pub mod synthesis;
pub mod su4;

pub use error::{Error, Result};
