//! Importance Clifford sampling: generation of error-sensitive circuits,
//! non-uniform sampling with probability proportional to `3^w`, uniform
//! sampling via Metropolis-Hastings, and the importance-weighted estimators
//! for the phenomenological error model.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::circuit::{Circuit, CircuitFrame, SlotGate};
use crate::pauli::{c1_action, c1_inverse, cliffords_mapping_to_z, Pauli, C1_SIZE};
use crate::stabilizer::{self, CircuitAnalysis};
use crate::{Error, Result};

/// Gates of the non-first-layer slots (the pattern a Markov chain walks on).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotPattern {
    pub gates: Vec<u8>,
}

impl SlotPattern {
    pub fn new(frame: &CircuitFrame, gates: Vec<u8>) -> Result<Self> {
        if gates.len() != frame.slot_count() - frame.n() {
            return Err(Error::DimensionMismatch(format!(
                "pattern of {} gates for {} non-first-layer slots",
                gates.len(),
                frame.slot_count() - frame.n()
            )));
        }
        if gates.iter().any(|&g| usize::from(g) >= C1_SIZE) {
            return Err(Error::OutOfRange("pattern gate index out of range".into()));
        }
        Ok(Self { gates })
    }

    /// Uniform pattern over the 24 single-qubit Cliffords per slot.
    pub fn random<R: Rng + ?Sized>(frame: &CircuitFrame, rng: &mut R) -> Self {
        let len = frame.slot_count() - frame.n();
        Self { gates: (0..len).map(|_| rng.random_range(0..C1_SIZE as u8)).collect() }
    }
}

/// An error-sensitive circuit with the statistics the samplers attach.
#[derive(Clone, Debug)]
pub struct EsSample {
    pub circuit: Circuit,
    /// Weight `w(C)` of the effective observable.
    pub weight: usize,
    /// Ideal expectation, always +1 or -1.
    pub f: i8,
    /// Importance reweighting factor `3^{-w(C)}`.
    pub weight_factor: f64,
}

fn candidate_analysis(
    frame: &Arc<CircuitFrame>,
    pattern: &SlotPattern,
) -> Result<(Vec<SlotGate>, CircuitAnalysis)> {
    let n = frame.n();
    let mut slots: Vec<SlotGate> = vec![SlotGate::Clifford(0); n];
    slots.extend(pattern.gates.iter().map(|&g| SlotGate::Clifford(g)));
    let candidate = Circuit::new(frame.clone(), slots.clone())?;
    let analysis = stabilizer::analyze(&candidate)?;
    Ok((slots, analysis))
}

fn es_circuit_inner<R: Rng + ?Sized>(
    frame: &Arc<CircuitFrame>,
    pattern: &SlotPattern,
    rng: &mut R,
) -> Result<EsSample> {
    let n = frame.n();
    let (mut slots, analysis) = candidate_analysis(frame, pattern)?;
    let effective = &analysis.effective_observable;
    let mut sign = effective.sign()?;
    // First-layer slots are the first n slots in circuit order; pick each
    // gate uniformly from the set mapping that qubit's factor to ±Z or I.
    for (slot, gate) in slots.iter_mut().enumerate().take(n) {
        let qubit = frame.slot_qubit(slot);
        let factor = effective.single_factor(qubit);
        let valid = cliffords_mapping_to_z(factor);
        let chosen = valid[rng.random_range(0..valid.len())];
        if factor != Pauli::I {
            let (img, neg) = c1_action(c1_inverse(chosen), factor);
            debug_assert_eq!(img, Pauli::Z);
            if neg {
                sign = -sign;
            }
        }
        *gate = SlotGate::Clifford(chosen);
    }
    let circuit = Circuit::new(frame.clone(), slots)?;
    Ok(EsSample {
        circuit,
        weight: analysis.weight,
        f: sign,
        weight_factor: 3f64.powi(-(analysis.weight as i32)),
    })
}

/// Generates one error-sensitive circuit for the given slot pattern: the
/// first-layer gates are drawn uniformly from the Cliffords that map each
/// factor of the effective observable to ±Z (all 24 for identity factors),
/// so the ideal expectation of the result is ±1.
pub fn es_circuit<R: Rng + ?Sized>(
    frame: &Arc<CircuitFrame>,
    pattern: &SlotPattern,
    rng: &mut R,
) -> Result<Circuit> {
    Ok(es_circuit_inner(frame, pattern, rng)?.circuit)
}

/// Non-uniform importance Clifford sampling: each draw takes a uniform slot
/// pattern and completes it into an error-sensitive circuit, so a circuit C
/// appears with probability `24^{-N_R} 3^{w(C)}`.
pub fn sample_nonuniform<R: Rng + ?Sized>(
    frame: &Arc<CircuitFrame>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<EsSample>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    (0..count)
        .map(|_| {
            let pattern = SlotPattern::random(frame, rng);
            es_circuit_inner(frame, &pattern, rng)
        })
        .collect()
}

/// A proposal distribution `g(pattern' | pattern)` for the uniform sampler.
pub trait Proposal {
    /// Proposes a new pattern and returns it with
    /// `ln g(old|new) - ln g(new|old)`.
    fn propose<R: Rng + ?Sized>(&self, current: &SlotPattern, rng: &mut R) -> (SlotPattern, f64);
}

/// Resamples `m` distinct slots uniformly from the 24 single-qubit
/// Cliffords; symmetric, so the proposal ratio is one.
#[derive(Clone, Copy, Debug)]
pub struct ResampleProposal {
    m: usize,
}

/// The default proposal: resample `m` randomly selected slots.
pub fn default_proposal(frame: &CircuitFrame, m: usize) -> Result<ResampleProposal> {
    let free = frame.slot_count() - frame.n();
    if m == 0 || m > free {
        return Err(Error::InvalidParameter(format!(
            "resample count {m} outside 1..={free}"
        )));
    }
    Ok(ResampleProposal { m })
}

impl Proposal for ResampleProposal {
    fn propose<R: Rng + ?Sized>(&self, current: &SlotPattern, rng: &mut R) -> (SlotPattern, f64) {
        let len = current.gates.len();
        let mut next = current.clone();
        // Partial Fisher-Yates draw of m distinct slot positions.
        let mut indices: Vec<usize> = (0..len).collect();
        for i in 0..self.m {
            let j = rng.random_range(i..len);
            indices.swap(i, j);
            next.gates[indices[i]] = rng.random_range(0..C1_SIZE as u8);
        }
        (next, 0.0)
    }
}

/// Output of the Metropolis-Hastings sampler.
#[derive(Clone, Debug)]
pub struct UniformSamples {
    /// One entry per chain step after burn-in; rejected steps repeat the
    /// previous circuit.
    pub samples: Vec<EsSample>,
    pub accepted: usize,
    pub steps: usize,
}

/// Default burn-in: ten times the slot count.
pub fn default_burn_in(frame: &CircuitFrame) -> usize {
    10 * frame.slot_count()
}

/// Uniform importance Clifford sampling: a Metropolis-Hastings chain on slot
/// patterns with acceptance `min(1, 3^{-w'} / 3^{-w} * g-ratio)`, whose
/// outputs are uniform over the error-sensitive circuit set.
pub fn sample_uniform<R: Rng + ?Sized, P: Proposal>(
    frame: &Arc<CircuitFrame>,
    count: usize,
    proposal: &P,
    initial: &SlotPattern,
    burn_in: usize,
    rng: &mut R,
) -> Result<UniformSamples> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut current = es_circuit_inner(frame, initial, rng)?;
    let mut current_pattern = initial.clone();
    let mut samples = Vec::with_capacity(count);
    let mut accepted = 0usize;
    let mut steps = 0usize;
    for step in 0..burn_in + count {
        let (pattern, log_ratio) = proposal.propose(&current_pattern, rng);
        let candidate = es_circuit_inner(frame, &pattern, rng)?;
        let log_accept = (current.weight as f64 - candidate.weight as f64) * 3f64.ln() + log_ratio;
        let accept = log_accept >= 0.0 || rng.random::<f64>() <= log_accept.exp();
        steps += 1;
        if accept {
            accepted += 1;
            current = candidate;
            current_pattern = pattern;
        }
        if step >= burn_in {
            samples.push(current.clone());
        }
    }
    Ok(UniformSamples { samples, accepted, steps })
}

/// Estimates of the global-depolarising-with-fluctuation model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhenomenologicalEstimate {
    /// Mean effective depolarising rate over the error-sensitive set.
    pub epsilon0: f64,
    /// Standard deviation of the effective rate (the fluctuation).
    pub delta: f64,
    /// Proportion of error-sensitive circuits among all Clifford circuits;
    /// only available from non-uniform (weighted) samples.
    pub eta: Option<f64>,
    pub sample_count: usize,
    pub se_epsilon0: f64,
    pub se_delta: f64,
    /// Set when the bias-corrected variance came out negative and was
    /// clamped to zero.
    pub delta_clamped: bool,
}

/// First, second and fourth central moments of a (possibly weighted)
/// sample, with delta-method standard errors for the mean and the standard
/// deviation.
#[derive(Clone, Debug)]
pub struct WeightedMoments {
    pub mean: f64,
    /// Square root of the bias-corrected variance.
    pub sd: f64,
    pub se_mean: f64,
    pub se_sd: f64,
    pub effective_samples: f64,
    /// Set when the bias-corrected variance was negative and clamped.
    pub clamped: bool,
}

/// Moments of `values` under optional non-negative weights; the variance
/// uses the reliability-weights bias correction.
pub fn weighted_moments(values: &[f64], weights: Option<&[f64]>) -> Result<WeightedMoments> {
    if values.len() < 2 {
        return Err(Error::DegenerateTraining(
            "at least two samples are required to estimate a spread".into(),
        ));
    }
    let m = values.len();
    let uniform = vec![1.0f64; m];
    let w = match weights {
        Some(w) if w.len() != m => {
            return Err(Error::DimensionMismatch("weights length mismatch".into()))
        }
        Some(w) => w,
        None => &uniform,
    };
    let w_sum: f64 = w.iter().sum();
    let w_sq: f64 = w.iter().map(|x| x * x).sum();
    if w_sum <= 0.0 {
        return Err(Error::DegenerateTraining("weights sum to zero".into()));
    }
    let denom = w_sum - w_sq / w_sum;
    if denom <= 0.0 {
        return Err(Error::DegenerateTraining(
            "effective sample size too small for a spread estimate".into(),
        ));
    }
    let mean = w.iter().zip(values).map(|(wi, v)| wi * v).sum::<f64>() / w_sum;
    let ss: f64 = w.iter().zip(values).map(|(wi, v)| wi * (v - mean).powi(2)).sum();
    let var_raw = ss / denom;
    let clamped = var_raw < 0.0;
    let var = var_raw.max(0.0);
    let sd = var.sqrt();
    let se_mean = w
        .iter()
        .zip(values)
        .map(|(wi, v)| (wi * (v - mean)).powi(2))
        .sum::<f64>()
        .sqrt()
        / w_sum;
    let m_eff = w_sum * w_sum / w_sq;
    let m4 = w.iter().zip(values).map(|(wi, v)| wi * (v - mean).powi(4)).sum::<f64>() / w_sum;
    let se_sd = if sd > 0.0 {
        ((m4 - var * var).max(0.0) / m_eff).sqrt() / (2.0 * sd)
    } else {
        0.0
    };
    Ok(WeightedMoments { mean, sd, se_mean, se_sd, effective_samples: m_eff, clamped })
}

/// Estimates `epsilon0` and `delta` from error-sensitive samples.
///
/// `data` holds `(f, y)` pairs with `f = ±1`; the effective rate of each
/// circuit is `1 - y f`. With `weights` (the samplers' `3^{-w}` factors) the
/// estimator is self-normalised importance weighting and `eta` is the plain
/// mean of the weights; without weights the samples are treated as uniform.
pub fn estimate_phenomenological(
    data: &[(f64, f64)],
    weights: Option<&[f64]>,
) -> Result<PhenomenologicalEstimate> {
    for &(f, _) in data {
        if (f.abs() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "sample with |f| = {} is not error-sensitive",
                f.abs()
            )));
        }
    }
    let rates: Vec<f64> = data.iter().map(|&(f, y)| 1.0 - y * f).collect();
    let moments = weighted_moments(&rates, weights)?;
    let eta = weights.map(|w| w.iter().sum::<f64>() / w.len() as f64);
    Ok(PhenomenologicalEstimate {
        epsilon0: moments.mean,
        delta: moments.sd,
        eta,
        sample_count: rates.len(),
        se_epsilon0: moments.se_mean,
        se_delta: moments.se_sd,
        delta_clamped: moments.clamped,
    })
}

/// Mean squared error `<(y - f)^2>`, optionally self-normalised over
/// importance weights (yielding the error-sensitive-set average from
/// non-uniform samples).
pub fn mse(f: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if f.is_empty() || f.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "mse over {} f values and {} y values",
            f.len(),
            y.len()
        )));
    }
    match weights {
        None => Ok(f
            .iter()
            .zip(y)
            .map(|(fi, yi)| (yi - fi).powi(2))
            .sum::<f64>()
            / f.len() as f64),
        Some(w) => {
            if w.len() != f.len() {
                return Err(Error::DimensionMismatch("weights length mismatch".into()));
            }
            let w_sum: f64 = w.iter().sum();
            if w_sum <= 0.0 {
                return Err(Error::DegenerateTraining("weights sum to zero".into()));
            }
            Ok(f.iter()
                .zip(y)
                .zip(w)
                .map(|((fi, yi), wi)| wi * (yi - fi).powi(2))
                .sum::<f64>()
                / w_sum)
        }
    }
}

/// Estimator of the full-Clifford-set MSE from non-uniform samples:
/// the plain mean of `3^{-w} (y-f)^2`, which equals `η L_{C^ES}`.
pub fn reweighted_population_mse(f: &[f64], y: &[f64], weight_factors: &[f64]) -> Result<f64> {
    if f.is_empty() || f.len() != y.len() || f.len() != weight_factors.len() {
        return Err(Error::DimensionMismatch("reweighted mse length mismatch".into()));
    }
    Ok(f.iter()
        .zip(y)
        .zip(weight_factors)
        .map(|((fi, yi), wi)| wi * (yi - fi).powi(2))
        .sum::<f64>()
        / f.len() as f64)
}

/// Exact enumeration data for a small frame.
#[derive(Clone, Debug)]
pub struct EsEnumeration {
    /// `|C^ES| = Σ_patterns 8^w 24^{n-w}`.
    pub total_es: f64,
    /// `η = |C^ES| / 24^{N_R}`.
    pub eta: f64,
    /// Number of slot patterns per weight `w`.
    pub pattern_weight_counts: Vec<u64>,
}

/// Visits every slot pattern of a small frame (at most four non-first-layer
/// slots) with its circuit analysis.
pub fn enumerate_patterns<F: FnMut(&[u8], &CircuitAnalysis)>(
    frame: &Arc<CircuitFrame>,
    mut visit: F,
) -> Result<()> {
    let free = frame.slot_count() - frame.n();
    if free > 4 {
        return Err(Error::InvalidParameter(format!(
            "enumeration over 24^{free} patterns is not tractable"
        )));
    }
    let mut digits = vec![0u8; free];
    loop {
        let pattern = SlotPattern { gates: digits.clone() };
        let (_, analysis) = candidate_analysis(frame, &pattern)?;
        visit(&digits, &analysis);
        // Base-24 odometer.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(());
            }
            digits[pos] += 1;
            if usize::from(digits[pos]) < C1_SIZE {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Counts the error-sensitive circuits of a small frame exactly.
pub fn enumerate_es(frame: &Arc<CircuitFrame>) -> Result<EsEnumeration> {
    let n = frame.n();
    let mut total = 0.0f64;
    let mut counts = vec![0u64; n + 1];
    enumerate_patterns(frame, |_, analysis| {
        let w = analysis.weight;
        counts[w] += 1;
        total += 8f64.powi(w as i32) * 24f64.powi((n - w) as i32);
    })?;
    let eta = total / 24f64.powi(frame.slot_count() as i32);
    Ok(EsEnumeration { total_es: total, eta, pattern_weight_counts: counts })
}
