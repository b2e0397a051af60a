//! Simulation library for studying how the bias of quantum error mitigation
//! formulas scales with circuit size.
//!
//! The crate provides:
//!
//! - signed Pauli-string algebra and the 24-element single-qubit Clifford
//!   group ([`pauli`]),
//! - circuits built on a fixed frame of two-qubit Clifford gates with
//!   variable single-qubit slots ([`circuit`]),
//! - a Heisenberg-picture stabilizer engine for Clifford circuits under
//!   Pauli noise ([`stabilizer`]),
//! - gate-level noise channels and the error models used in the scaling
//!   experiments ([`noise`]),
//! - an exact density-matrix simulator for arbitrary bound circuits
//!   ([`density`]),
//! - importance Clifford sampling of error-sensitive training circuits and
//!   the phenomenological (global-depolarising-with-fluctuation) estimators
//!   ([`ics`]),
//! - error mitigation formulas, training and bias bounds ([`mitigation`]),
//! - a config-driven experiment harness with CSV output ([`harness`]).

pub mod circuit;
pub mod density;
pub mod harness;
pub mod ics;
pub mod mitigation;
pub mod noise;
pub mod pauli;
pub mod stabilizer;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("circuit is not Clifford: {0}")]
    NonClifford(String),
    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
