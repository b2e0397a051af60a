//! Error mitigation formulas, their training from error-sensitive circuit
//! data, and the covariance-based bounds on the residual bias of optimised
//! extrapolation formulas.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::density;
use crate::ics::{EsSample, PhenomenologicalEstimate};
use crate::noise::NoiseModel;
use crate::stabilizer::{self, GateObs};
use crate::{Error, Result};

/// A mitigation formula with its variational parameters. `apply` maps the
/// raw measured values of the formula's circuits to the mitigated estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MitigationFormula {
    PemiBasic { eps0: f64 },
    PemiOptimal { eps0: f64, delta: f64 },
    LinearExtrapolation { lambda: f64 },
    Richardson { r_list: Vec<f64>, q_list: Vec<f64> },
    PecInverse { lambda: f64 },
    /// Second-order virtual distillation; inputs are Tr(Q rho^2), Tr(rho^2).
    VirtualDistillation,
    VdPemi { eps0_prime: f64 },
}

impl MitigationFormula {
    /// Number of measured values the formula consumes.
    pub fn input_arity(&self) -> usize {
        match self {
            MitigationFormula::PemiBasic { .. }
            | MitigationFormula::PemiOptimal { .. }
            | MitigationFormula::PecInverse { .. } => 1,
            MitigationFormula::LinearExtrapolation { .. }
            | MitigationFormula::VirtualDistillation
            | MitigationFormula::VdPemi { .. } => 2,
            MitigationFormula::Richardson { q_list, .. } => q_list.len(),
        }
    }

    pub fn apply(&self, ys: &[f64]) -> Result<f64> {
        if ys.len() != self.input_arity() {
            return Err(Error::DimensionMismatch(format!(
                "formula takes {} inputs, got {}",
                self.input_arity(),
                ys.len()
            )));
        }
        match self {
            MitigationFormula::PemiBasic { eps0 } => {
                if *eps0 >= 1.0 {
                    return Err(Error::Numerical(format!(
                        "average depolarising rate {eps0} >= 1; signal lost"
                    )));
                }
                Ok(ys[0] / (1.0 - eps0))
            }
            MitigationFormula::PemiOptimal { eps0, delta } => {
                let denom = (1.0 - eps0).powi(2) + delta * delta;
                if denom <= 0.0 {
                    return Err(Error::Numerical("degenerate optimal rescale".into()));
                }
                Ok(ys[0] * (1.0 - eps0) / denom)
            }
            MitigationFormula::LinearExtrapolation { lambda } => {
                Ok(extrapolate_linear(ys[0], ys[1], *lambda))
            }
            MitigationFormula::Richardson { q_list, .. } => {
                Ok(q_list.iter().zip(ys).map(|(q, y)| q * y).sum())
            }
            MitigationFormula::PecInverse { .. } => Ok(ys[0]),
            MitigationFormula::VirtualDistillation => {
                if ys[1].abs() < 1e-12 {
                    return Err(Error::Numerical("vanishing purity in distillation".into()));
                }
                Ok(ys[0] / ys[1])
            }
            MitigationFormula::VdPemi { eps0_prime } => {
                if ys[1].abs() < 1e-12 {
                    return Err(Error::Numerical("vanishing purity in distillation".into()));
                }
                if *eps0_prime >= 1.0 {
                    return Err(Error::Numerical(format!(
                        "virtual-machine rate {eps0_prime} >= 1; signal lost"
                    )));
                }
                Ok(ys[0] / ys[1] / (1.0 - eps0_prime))
            }
        }
    }

    /// Richardson formula for the given amplification factors.
    pub fn richardson(r_list: Vec<f64>) -> Result<Self> {
        let q_list = richardson_coefficients(&r_list)?;
        Ok(MitigationFormula::Richardson { r_list, q_list })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("formula serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rescales a measured value by the phenomenological estimate: the basic
/// form divides by `1 - eps0`; the optimal form multiplies by
/// `(1-eps0) / ((1-eps0)^2 + delta^2)` and never amplifies more than the
/// basic form.
pub fn pemi(y: f64, est: &PhenomenologicalEstimate, optimal: bool) -> Result<f64> {
    let formula = if optimal {
        MitigationFormula::PemiOptimal { eps0: est.epsilon0, delta: est.delta }
    } else {
        MitigationFormula::PemiBasic { eps0: est.epsilon0 }
    };
    formula.apply(&[y])
}

/// The parameterised linear extrapolation `λ y_1 + (1-λ) y_2`.
pub fn extrapolate_linear(y1: f64, y2: f64, lambda: f64) -> f64 {
    lambda * y1 + (1.0 - lambda) * y2
}

const TRAINING_TOL: f64 = 1e-12;

/// The single-training-circuit optimum `λ* = (f_T - y_T2)/(y_T1 - y_T2)`.
pub fn train_lambda_single(y_t1: f64, y_t2: f64, f_t: f64) -> Result<f64> {
    let denom = y_t1 - y_t2;
    if denom.abs() < TRAINING_TOL {
        return Err(Error::DegenerateTraining(format!(
            "training values coincide (|y1 - y2| = {:.3e}); resample the training circuit",
            denom.abs()
        )));
    }
    Ok((f_t - y_t2) / denom)
}

/// Trains the extrapolation parameter on one freshly drawn error-sensitive
/// circuit, redrawing up to ten times when the two measured values are
/// degenerate.
pub fn train_lambda_resampling<R: rand::Rng + ?Sized>(
    frame: &std::sync::Arc<crate::circuit::CircuitFrame>,
    base: &NoiseModel,
    amplified: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    const ATTEMPTS: usize = 10;
    let mut last_err = None;
    for _ in 0..ATTEMPTS {
        let sample = crate::ics::sample_nonuniform(frame, 1, rng)?.remove(0);
        let y1 = density::noisy_expectation(&sample.circuit, base)?;
        let y2 = density::noisy_expectation(&sample.circuit, amplified)?;
        match train_lambda_single(y1, y2, f64::from(sample.f)) {
            Ok(lambda) => return Ok(lambda),
            Err(err @ Error::DegenerateTraining(_)) => last_err = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::DegenerateTraining("training values coincide on every attempt".into())
    }))
}

/// `λ = ε_2 / (ε_2 - ε_1)`, removing the mean depolarising contribution of
/// two measured phenomenological rates.
pub fn optimal_lambda_from_rates(eps1: f64, eps2: f64) -> Result<f64> {
    let denom = eps2 - eps1;
    if denom.abs() < TRAINING_TOL {
        return Err(Error::DegenerateTraining(
            "equal rates leave the extrapolation parameter undetermined".into(),
        ));
    }
    Ok(eps2 / denom)
}

/// Coefficients of the Richardson extrapolation of order `m = r_list.len()-1`:
/// the unique solution of `Σ q_i = 1` and `Σ q_i r_i^k = 0` for `k = 1..m`.
pub fn richardson_coefficients(r_list: &[f64]) -> Result<Vec<f64>> {
    let m = r_list.len();
    if m < 2 {
        return Err(Error::InvalidParameter(
            "richardson extrapolation needs at least two amplification factors".into(),
        ));
    }
    for (i, &ri) in r_list.iter().enumerate() {
        if ri <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplification factor {ri} must be positive"
            )));
        }
        for &rj in &r_list[i + 1..] {
            if (ri - rj).abs() < 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "repeated amplification factor {ri} makes the system singular"
                )));
            }
        }
    }
    let a = DMatrix::from_fn(m, m, |row, col| r_list[col].powi(row as i32));
    let mut b = nalgebra::DVector::zeros(m);
    b[0] = 1.0;
    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular Vandermonde system".into()))?;
    Ok(solution.iter().copied().collect())
}

/// Deterministic probabilistic error cancellation: evolves the circuit with
/// the inverse map `(1-λ)[I] + λ D_{1,2}` applied after every noisy
/// two-qubit gate and returns the corrected expectation.
pub fn pec_mitigate(circuit: &Circuit, noise: &NoiseModel, lambda: f64) -> Result<f64> {
    let state = density::run_with_pec(circuit, noise, lambda)?;
    state.expectation(circuit.observable())
}

/// Exact-knowledge quasi-probability form for the global depolarising
/// model: rescaling the raw value by `(1-ε)^{-N}` recovers the ideal one.
pub fn pec_global_closed_form(y_raw: f64, epsilon: f64, gate_count: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("rate {epsilon} out of range")));
    }
    Ok(y_raw / (1.0 - epsilon).powi(gate_count as i32))
}

/// Second-order virtual distillation `Tr(Q rho^2) / Tr(rho^2)` of the noisy
/// final state.
pub fn virtual_distillation(circuit: &Circuit, noise: &NoiseModel) -> Result<f64> {
    let state = density::run(circuit, noise)?;
    let (num, den) = state.purity_pair(circuit.observable())?;
    MitigationFormula::VirtualDistillation.apply(&[num, den])
}

/// Trains the distillation rescale on error-sensitive circuits:
/// `eps0' = 1 - <y'_T f_T>` over the (optionally weighted) training set.
pub fn train_vd_pemi(train: &[(f64, f64)], weights: Option<&[f64]>) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::DegenerateTraining("empty distillation training set".into()));
    }
    let (num, den) = match weights {
        None => (
            train.iter().map(|&(f, y)| y * f).sum::<f64>(),
            train.len() as f64,
        ),
        Some(w) => {
            if w.len() != train.len() {
                return Err(Error::DimensionMismatch("weights length mismatch".into()));
            }
            (
                train.iter().zip(w).map(|(&(f, y), wi)| wi * y * f).sum::<f64>(),
                w.iter().sum::<f64>(),
            )
        }
    };
    let eps0_prime = 1.0 - num / den;
    if eps0_prime >= 1.0 {
        return Err(Error::Numerical(format!(
            "virtual-machine rate {eps0_prime} >= 1; signal lost"
        )));
    }
    Ok(eps0_prime)
}

/// Distillation concatenated with the phenomenological rescale: trains
/// `eps0'` on the error-sensitive set's distilled values, then returns
/// `y'' = y' / (1 - eps0')` for every test circuit.
pub fn vd_pemi(test: &[Circuit], train: &[EsSample], noise: &NoiseModel) -> Result<Vec<f64>> {
    let train_data: Vec<(f64, f64)> = train
        .iter()
        .map(|s| Ok((f64::from(s.f), virtual_distillation(&s.circuit, noise)?)))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = train.iter().map(|s| s.weight_factor).collect();
    let eps0_prime = train_vd_pemi(&train_data, Some(&weights))?;
    test.iter()
        .map(|c| Ok(virtual_distillation(c, noise)? / (1.0 - eps0_prime)))
        .collect()
}

/// Mean rates and fluctuation covariances of a set of noise-model variants,
/// estimated over error-sensitive circuits.
#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    /// `E_i = 1 - ε_i`.
    pub e: Vec<f64>,
    /// Fluctuation covariance matrix, positive semi-definite after
    /// symmetrisation.
    pub k: DMatrix<f64>,
    /// Proportion of error-sensitive circuits.
    pub eta: f64,
}

/// Builds a [`CovarianceEstimate`] from per-circuit rate vectors (one rate
/// per model variant). `eta` comes from the mean of the importance weights
/// unless overridden.
pub fn estimate_covariance(
    rates: &[Vec<f64>],
    weights: Option<&[f64]>,
    eta_override: Option<f64>,
) -> Result<CovarianceEstimate> {
    if rates.len() < 2 {
        return Err(Error::DegenerateTraining("need at least two rate samples".into()));
    }
    let dims = rates[0].len();
    if dims == 0 || rates.iter().any(|r| r.len() != dims) {
        return Err(Error::DimensionMismatch("ragged rate vectors".into()));
    }
    let m = rates.len();
    let uniform = vec![1.0; m];
    let w = match weights {
        Some(w) if w.len() != m => {
            return Err(Error::DimensionMismatch("weights length mismatch".into()))
        }
        Some(w) => w,
        None => &uniform,
    };
    let w_sum: f64 = w.iter().sum();
    let w_sq: f64 = w.iter().map(|x| x * x).sum();
    let denom = w_sum - w_sq / w_sum;
    if denom <= 0.0 {
        return Err(Error::DegenerateTraining("effective sample size too small".into()));
    }
    let mut means = vec![0.0f64; dims];
    for (row, wi) in rates.iter().zip(w) {
        for (mean, value) in means.iter_mut().zip(row) {
            *mean += wi * value;
        }
    }
    for mean in &mut means {
        *mean /= w_sum;
    }
    let mut k = DMatrix::zeros(dims, dims);
    for (row, wi) in rates.iter().zip(w) {
        for a in 0..dims {
            for b in 0..dims {
                k[(a, b)] += wi * (row[a] - means[a]) * (row[b] - means[b]);
            }
        }
    }
    k /= denom;
    // Symmetrise and clamp tiny negative eigenvalues.
    k = (k.clone() + k.transpose()) * 0.5;
    let eigen = k.clone().symmetric_eigen();
    let clamped = DMatrix::from_diagonal(&eigen.eigenvalues.map(|v| v.max(0.0)));
    k = &eigen.eigenvectors * clamped * eigen.eigenvectors.transpose();
    k = (k.clone() + k.transpose()) * 0.5;

    let eta = match eta_override {
        Some(eta) => eta,
        None => match weights {
            Some(w) => w.iter().sum::<f64>() / m as f64,
            None => {
                return Err(Error::InvalidParameter(
                    "eta must be supplied when samples are unweighted".into(),
                ))
            }
        },
    };
    Ok(CovarianceEstimate { e: means.iter().map(|eps| 1.0 - eps).collect(), k, eta })
}

/// Predicted RMSE of the extrapolation with coefficient vector `lambdas`:
/// `sqrt(η [(E·Λ - 1)^2 + Λ^T K Λ])`.
pub fn extrapolation_rmse_prediction(est: &CovarianceEstimate, lambdas: &[f64]) -> Result<f64> {
    if lambdas.len() != est.e.len() {
        return Err(Error::DimensionMismatch("coefficient count mismatch".into()));
    }
    let lam = nalgebra::DVector::from_column_slice(lambdas);
    let e = nalgebra::DVector::from_column_slice(&est.e);
    let bias = e.dot(&lam) - 1.0;
    let fluct = (lam.transpose() * &est.k * &lam)[(0, 0)];
    Ok((est.eta * (bias * bias + fluct)).max(0.0).sqrt())
}

/// The two residual-bias bounds of the optimised general extrapolation:
/// `sqrt(η E^T K E) / ||E||^2` and `sqrt(η Σ Δ_i^2) / ||E||`, with the
/// first never exceeding the second.
pub fn theorem1_bound(est: &CovarianceEstimate) -> Result<(f64, f64)> {
    let e = nalgebra::DVector::from_column_slice(&est.e);
    let norm = e.norm();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("zero mean-rate vector".into()));
    }
    let quad = (e.transpose() * &est.k * &e)[(0, 0)].max(0.0);
    let bound1 = (est.eta * quad).sqrt() / (norm * norm);
    let bound2 = (est.eta * est.k.trace()).max(0.0).sqrt() / norm;
    Ok((bound1, bound2))
}

/// Per-circuit sufficient statistics for training the PEC inverse-map
/// parameter on Clifford circuits: under the inverse map the prediction is
/// `y'(λ) = f (1-λ)^m B`, with `m` the number of gates whose local
/// backward observable is non-identity and `B` the product of the model's
/// transfer factors there.
#[derive(Clone, Debug)]
pub struct PecTrainingStats {
    pub f: f64,
    pub non_identity_gates: u32,
    pub base_factor: f64,
}

/// Builds PEC training statistics for a Clifford circuit under a Pauli
/// model.
pub fn pec_training_stats(circuit: &Circuit, noise: &NoiseModel) -> Result<PecTrainingStats> {
    let channel = noise.two_qubit_channel()?.ok_or_else(|| {
        Error::InvalidParameter("PEC training requires a per-gate channel".into())
    })?;
    let mut table = [0.0f64; 16];
    for (code, entry) in table.iter_mut().enumerate() {
        *entry = channel.transfer_eigenvalue(code as u8).ok_or_else(|| {
            Error::InvalidParameter("PEC training requires a Pauli channel".into())
        })?;
    }
    let analysis = stabilizer::analyze(circuit)?;
    let mut non_identity = 0u32;
    let mut base = 1.0f64;
    for obs in &analysis.gate_observables {
        match obs {
            GateObs::TwoQubit { code, .. } => {
                if *code != 0 {
                    non_identity += 1;
                    base *= table[usize::from(*code)];
                }
            }
            GateObs::Slot { slot, code, .. } => {
                if *code != 0 {
                    if let Some(chan) = noise.slot_channel(&circuit.slots()[*slot])? {
                        base *= chan.transfer_eigenvalue(*code).ok_or_else(|| {
                            Error::InvalidParameter("non-Pauli slot channel".into())
                        })?;
                    }
                }
            }
        }
    }
    Ok(PecTrainingStats {
        f: f64::from(analysis.ideal_expectation),
        non_identity_gates: non_identity,
        base_factor: base,
    })
}

/// Exact PEC-corrected expectation of a training circuit at parameter `λ`.
pub fn pec_training_prediction(stats: &PecTrainingStats, lambda: f64) -> f64 {
    stats.f * (1.0 - lambda).powi(stats.non_identity_gates as i32) * stats.base_factor
}

/// Golden-section minimisation of the reweighted training MSE of the PEC
/// parameter over `[lo, hi]`.
pub fn optimize_pec_lambda(
    stats: &[PecTrainingStats],
    weights: Option<&[f64]>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::DegenerateTraining("empty PEC training set".into()));
    }
    if lo >= hi {
        return Err(Error::InvalidParameter("invalid search interval".into()));
    }
    let objective = |lambda: f64| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, s) in stats.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            let err = pec_training_prediction(s, lambda) - s.f;
            num += w * err * err;
            den += w;
        }
        num / den
    };
    Ok(golden_section_min(objective, lo, hi, tol))
}

/// Golden-section search for the minimum of a unimodal function.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}
