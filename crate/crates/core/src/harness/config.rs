//! Experiment configuration: JSON schema, validation and grid expansion.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::circuit::{FamilyKind, FrameFamily, TwoQubitKind};
use crate::noise::NoiseModel;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EpsilonHistogram,
    ScalingSweep,
    GateDependentSweep,
    FormulaComparison,
    ErrorPropagation,
    Feasibility,
    FcDependence,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EpsilonHistogram => "epsilon_histogram",
            ExperimentKind::ScalingSweep => "scaling_sweep",
            ExperimentKind::GateDependentSweep => "gate_dependent_sweep",
            ExperimentKind::FormulaComparison => "formula_comparison",
            ExperimentKind::ErrorPropagation => "error_propagation",
            ExperimentKind::Feasibility => "feasibility",
            ExperimentKind::FcDependence => "fc_dependence",
        }
    }
}

/// The frame-family grid an experiment sweeps over (cross product of qubit
/// counts and two-qubit gate counts).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyGrid {
    pub kind: FamilyKind,
    pub n: Vec<usize>,
    pub two_qubit_count: Vec<usize>,
    #[serde(default)]
    pub gate: TwoQubitKind,
    #[serde(default)]
    pub open_chain: bool,
}

impl FamilyGrid {
    /// All (n, N) grid points in row-major order.
    pub fn points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &count in &self.two_qubit_count {
                out.push((n, count));
            }
        }
        out
    }

    pub fn family(&self, n: usize, two_qubit_count: usize, seed: u64) -> FrameFamily {
        FrameFamily {
            kind: self.kind,
            n,
            two_qubit_count,
            seed,
            gate: self.gate,
            open_chain: self.open_chain,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Accept a random unitary circuit with probability `f^2`.
    #[default]
    Rejection,
    /// Keep every circuit and carry `f^2` as a histogram weight.
    Reweighted,
}

fn default_train() -> usize {
    1000
}

fn default_test() -> usize {
    1000
}

fn default_bins() -> usize {
    50
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub family: FamilyGrid,
    pub noise: NoiseModel,
    #[serde(default = "default_train")]
    pub n_train: usize,
    #[serde(default = "default_test")]
    pub n_test: usize,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Histogram bin count (epsilon-histogram experiment).
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// How the `f^2` sampling weight is realised (epsilon-histogram and
    /// gate-dependent experiments).
    #[serde(default)]
    pub weighting: WeightingMode,
    /// Rotation scales for the near-one-|f| circuit generator.
    #[serde(default)]
    pub rotation_scales: Option<Vec<f64>>,
    /// Slots resampled per Metropolis-Hastings proposal.
    #[serde(default)]
    pub resample_slots: Option<usize>,
    /// Include the distillation protocols in the formula comparison.
    #[serde(default)]
    pub include_vd: Option<bool>,
    /// Scaling sweep: draw the per-gate error rate from the total-budget
    /// protocol at every grid point (stratified over the gate-count axis).
    #[serde(default = "default_true")]
    pub sample_rate_per_point: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.n.is_empty() || self.family.two_qubit_count.is_empty() {
            return Err(Error::Config("empty family grid".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config("sample counts must be >= 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bin count must be >= 1".into()));
        }
        for &n in &self.family.n {
            if n < 2 {
                return Err(Error::Config(format!("family qubit count {n} too small")));
            }
        }
        for &count in &self.family.two_qubit_count {
            if count == 0 {
                return Err(Error::Config("two_qubit_count must be >= 1".into()));
            }
        }
        if let Some(scales) = &self.rotation_scales {
            if scales.iter().any(|&s| s < 0.0) {
                return Err(Error::Config("rotation scales must be >= 0".into()));
            }
        }
        // Desk-scale guidance; larger values run but take long.
        let max_n = self.family.n.iter().copied().max().unwrap_or(0);
        let max_count = self.family.two_qubit_count.iter().copied().max().unwrap_or(0);
        if max_n > 8 || max_count > 300 || self.n_test > 2000 {
            eprintln!(
                "warning: configuration beyond desk scale (n = {max_n}, N = {max_count}, \
                 n_test = {}); expect a long run",
                self.n_test
            );
        }
        Ok(())
    }
}
