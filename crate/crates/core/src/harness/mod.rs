//! Config-driven experiment harness: the sole owner of file I/O.
//!
//! Identical (config, seed) pairs produce bit-identical CSV output
//! regardless of the worker count; see [`runner`] for the seed-derivation
//! scheme that makes this hold.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, FamilyGrid, WeightingMode};
pub use experiments::{expectation_auto, run_experiment};
pub use fit::{fit_power_law, ScalingFit};
pub use runner::{derive_seed, parallel_indexed_map, rng_for, RunSummary};
