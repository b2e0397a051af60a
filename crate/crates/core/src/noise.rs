//! Gate-level noise channels and the error models used in the experiments.
//!
//! Each model is exposed both as Kraus/superoperator data for the
//! density-matrix simulator and, where the model is a Pauli channel, as a
//! product of binary Pauli error channels for the stabilizer engine. The
//! product-form probabilities are chosen so that the product reproduces the
//! summation-form depolarising factor exactly, which keeps the two engines
//! interchangeable on Clifford circuits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, SlotGate};
use crate::pauli::{Mat2, Pauli, PauliString};
use crate::stabilizer::{self, GateObs};
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;

fn cmat_from_mat2(m: &Mat2) -> CMat {
    CMat::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Matrix of a local Pauli on `arity` qubits from its code
/// (`x_a | z_a<<1 | x_b<<2 | z_b<<3`, qubit a is the low index bit).
fn local_pauli_matrix(arity: usize, code: u8) -> CMat {
    let pa = Pauli::from_bits(code & 1 == 1, code & 2 == 2);
    if arity == 1 {
        return cmat_from_mat2(&pa.matrix());
    }
    let pb = Pauli::from_bits(code & 4 == 4, code & 8 == 8);
    cmat_from_mat2(&pb.matrix()).kronecker(&cmat_from_mat2(&pa.matrix()))
}

fn local_pauli_string(arity: usize, code: u8) -> PauliString {
    let pa = Pauli::from_bits(code & 1 == 1, code & 2 == 2);
    if arity == 1 {
        return PauliString::from_factors(&[pa], false).expect("arity 1");
    }
    let pb = Pauli::from_bits(code & 4 == 4, code & 8 == 8);
    PauliString::from_factors(&[pa, pb], false).expect("arity 2")
}

/// A quantum channel on one or two qubits.
#[derive(Clone, Debug)]
pub struct Channel {
    pub arity: usize,
    pub kraus: Vec<CMat>,
    /// Mixture form `Σ p_k [P_k]` when the channel is a Pauli channel;
    /// probabilities sum to one.
    pub pauli_form: Option<Vec<(PauliString, f64)>>,
}

impl Channel {
    fn from_pauli_mixture(arity: usize, mixture: Vec<(u8, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for &(_, p) in &mixture {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "mixture probability {p} outside [0, 1]"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture probabilities sum to {total}"
            )));
        }
        let kraus = mixture
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .map(|&(code, p)| local_pauli_matrix(arity, code) * Complex64::new(p.sqrt(), 0.0))
            .collect();
        let pauli_form = mixture
            .into_iter()
            .map(|(code, p)| (local_pauli_string(arity, code), p))
            .collect();
        Ok(Self { arity, kraus, pauli_form: Some(pauli_form) })
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    /// Superoperator `Σ_K K ⊗ conj(K)` acting on row-major vectorised
    /// density blocks.
    pub fn superoperator(&self) -> CMat {
        let d = self.dim();
        let mut s = CMat::zeros(d * d, d * d);
        for k in &self.kraus {
            s += k.kronecker(&k.map(|e| e.conj()));
        }
        s
    }

    /// Max-norm of `Σ K†K - I` (trace-preservation defect).
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut acc = CMat::zeros(d, d);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        acc -= identity(d);
        acc.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Pauli-transfer eigenvalue on the local Pauli with the given code:
    /// the factor the channel applies to that observable component.
    /// `None` when the channel is not a Pauli channel.
    pub fn transfer_eigenvalue(&self, code: u8) -> Option<f64> {
        let form = self.pauli_form.as_ref()?;
        let target = local_pauli_string(self.arity, code);
        Some(
            form.iter()
                .map(|(p, prob)| if p.anticommutes(&target) { -prob } else { *prob })
                .sum(),
        )
    }
}

/// Uniform two-qubit Pauli mixing: `(1 - 16ε/15)[I] + (16ε/15) D_{1,2}`,
/// i.e. the identity with probability `1-ε` and each of the 15 non-identity
/// two-qubit Paulis with probability `ε/15`.
pub fn gate_depolarising(epsilon: f64) -> Result<Channel> {
    if !(0.0..=15.0 / 16.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "gate depolarising rate {epsilon} outside [0, 15/16]"
        )));
    }
    let mut mixture = vec![(0u8, 1.0 - epsilon)];
    mixture.extend((1u8..16).map(|code| (code, epsilon / 15.0)));
    Channel::from_pauli_mixture(2, mixture)
}

/// The dephasing-after-depolarising Pauli model `Z_2 Z_1 N` with gate
/// depolarising rate `eps_d` and per-qubit dephasing rate `eps_z`.
pub fn depol_dephase(eps_d: f64, eps_z: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&eps_z) {
        return Err(Error::InvalidParameter(format!(
            "dephasing rate {eps_z} outside [0, 1]"
        )));
    }
    let base = gate_depolarising(eps_d)?;
    // Compose the mixtures; signs are irrelevant for conjugation maps.
    let mut probs = [0.0f64; 16];
    for (p, prob) in base.pauli_form.as_ref().expect("pauli channel") {
        probs[usize::from(p.local_code2(0, 1))] += prob;
    }
    for qubit_code in [2u8, 8u8] {
        // Z on qubit a (code 2) then Z on qubit b (code 8).
        let mut next = [0.0f64; 16];
        for (code, prob) in probs.iter().enumerate() {
            next[code] += prob * (1.0 - eps_z);
            next[code ^ usize::from(qubit_code)] += prob * eps_z;
        }
        probs = next;
    }
    let mixture: Vec<(u8, f64)> =
        probs.iter().enumerate().map(|(code, &p)| (code as u8, p)).collect();
    Channel::from_pauli_mixture(2, mixture)
}

/// Single-qubit depolarising attached to a bound slot gate `R`, with rate
/// `eps_s = 0.1 π⁻¹ ε arccos(|Tr R| / 2)`.
pub fn gate_dependent_single(r_matrix: &Mat2, epsilon: f64) -> Result<Channel> {
    let eps_s = gate_dependent_rate(r_matrix, epsilon)?;
    let mixture = vec![
        (0u8, 1.0 - eps_s),
        (1u8, eps_s / 3.0),
        (2u8, eps_s / 3.0),
        (3u8, eps_s / 3.0),
    ];
    Channel::from_pauli_mixture(1, mixture)
}

/// The rate `eps_s` of the gate-dependent single-qubit model.
pub fn gate_dependent_rate(r_matrix: &Mat2, epsilon: f64) -> Result<f64> {
    let half_trace = (r_matrix[0][0] + r_matrix[1][1]).norm() / 2.0;
    if half_trace > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "|Tr R|/2 = {half_trace} exceeds 1; matrix is not unitary"
        )));
    }
    Ok(0.1 / std::f64::consts::PI * epsilon * half_trace.min(1.0).acos())
}

/// Parameters of the composite error model attached to each two-qubit gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    pub eps_d: f64,
    /// Dephasing rate per gate qubit.
    pub eps_z: [f64; 2],
    /// Coherent rotation angles per gate qubit, about X, Y, Z.
    pub theta: [[f64; 3]; 2],
    /// Amplitude damping rate per gate qubit.
    pub eps_a: [f64; 2],
}

impl CompositeParams {
    pub fn zero() -> Self {
        Self { eps_d: 0.0, eps_z: [0.0; 2], theta: [[0.0; 3]; 2], eps_a: [0.0; 2] }
    }

    /// Scales every rate and every coherent-rotation angle linearly.
    pub fn scaled(&self, r: f64) -> Self {
        Self {
            eps_d: self.eps_d * r,
            eps_z: [self.eps_z[0] * r, self.eps_z[1] * r],
            theta: [
                [self.theta[0][0] * r, self.theta[0][1] * r, self.theta[0][2] * r],
                [self.theta[1][0] * r, self.theta[1][1] * r, self.theta[1][2] * r],
            ],
            eps_a: [self.eps_a[0] * r, self.eps_a[1] * r],
        }
    }
}

/// Random weights of the composite model components.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeKappas {
    pub d: f64,
    pub z: [f64; 2],
    pub p: [[f64; 3]; 2],
    pub a: [f64; 2],
}

/// Composite parameters from a total per-gate budget and explicit kappas:
/// `eps_d = (1 + 0.2 κ_d) ε/9`, `eps_{i,z} = (1 + 0.2 κ_{i,z}) ε/9`,
/// `θ_{i,P} = κ_{i,P} ε/9`, `eps_{i,a} = (1 + 0.2 κ_{i,a}) ε/6`.
pub fn composite_params_from_kappas(epsilon: f64, k: &CompositeKappas) -> CompositeParams {
    CompositeParams {
        eps_d: (1.0 + 0.2 * k.d) * epsilon / 9.0,
        eps_z: [
            (1.0 + 0.2 * k.z[0]) * epsilon / 9.0,
            (1.0 + 0.2 * k.z[1]) * epsilon / 9.0,
        ],
        theta: [
            [
                k.p[0][0] * epsilon / 9.0,
                k.p[0][1] * epsilon / 9.0,
                k.p[0][2] * epsilon / 9.0,
            ],
            [
                k.p[1][0] * epsilon / 9.0,
                k.p[1][1] * epsilon / 9.0,
                k.p[1][2] * epsilon / 9.0,
            ],
        ],
        eps_a: [
            (1.0 + 0.2 * k.a[0]) * epsilon / 6.0,
            (1.0 + 0.2 * k.a[1]) * epsilon / 6.0,
        ],
    }
}

/// Draws composite parameters with every kappa uniform in [-1, 1].
pub fn sample_composite_params<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> Result<CompositeParams> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("composite budget must be positive".into()));
    }
    let mut u = || rng.random_range(-1.0..=1.0);
    let k = CompositeKappas {
        d: u(),
        z: [u(), u()],
        p: [[u(), u(), u()], [u(), u(), u()]],
        a: [u(), u()],
    };
    Ok(composite_params_from_kappas(epsilon, &k))
}

fn embed_single(qubit: usize, m: &CMat) -> CMat {
    // Local two-qubit basis index is bit_a + 2 bit_b.
    let id = identity(2);
    if qubit == 0 {
        id.kronecker(m)
    } else {
        m.kronecker(&id)
    }
}

/// The composite channel `A_2 A_1 [R_2] [R_1] Z_2 Z_1 N` (depolarising
/// first, amplitude damping last).
pub fn composite_channel(params: &CompositeParams) -> Result<Channel> {
    for &z in &params.eps_z {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidParameter(format!("dephasing rate {z} out of range")));
        }
    }
    for &a in &params.eps_a {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!("damping rate {a} out of range")));
        }
    }
    let mut kraus = gate_depolarising(params.eps_d)?.kraus;

    let compose = |kraus: Vec<CMat>, stage: &[CMat]| -> Vec<CMat> {
        let mut out = Vec::with_capacity(kraus.len() * stage.len());
        for s in stage {
            for k in &kraus {
                out.push(s * k);
            }
        }
        out
    };

    for qubit in 0..2 {
        let z = params.eps_z[qubit];
        if z > 0.0 {
            let zmat = cmat_from_mat2(&Pauli::Z.matrix());
            let stage = vec![
                embed_single(qubit, &(identity(2) * Complex64::new((1.0 - z).sqrt(), 0.0))),
                embed_single(qubit, &(zmat * Complex64::new(z.sqrt(), 0.0))),
            ];
            kraus = compose(kraus, &stage);
        }
    }
    for qubit in 0..2 {
        let mut rot = identity(2);
        for (axis, pauli) in [Pauli::X, Pauli::Y, Pauli::Z].iter().enumerate() {
            let theta = params.theta[qubit][axis];
            if theta != 0.0 {
                let p = cmat_from_mat2(&pauli.matrix());
                let half = theta / 2.0;
                let r = identity(2) * Complex64::new(half.cos(), 0.0)
                    - p * Complex64::new(0.0, half.sin());
                rot = r * rot;
            }
        }
        kraus = compose(kraus, &[embed_single(qubit, &rot)]);
    }
    for qubit in 0..2 {
        let a = params.eps_a[qubit];
        if a > 0.0 {
            let k0 = CMat::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new((1.0 - a).sqrt(), 0.0),
                ],
            );
            let k1 = CMat::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.0, 0.0),
                    Complex64::new(a.sqrt(), 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
            );
            kraus = compose(kraus, &[embed_single(qubit, &k0), embed_single(qubit, &k1)]);
        }
    }
    Ok(Channel { arity: 2, kraus, pauli_form: None })
}

/// Draws the per-gate error rate `ε = 10^η / N` with `η` uniform in
/// [-2.5, -0.5], so the total budget `N ε` spans about 0.003 to 0.3.
pub fn sample_total_error_rate<R: Rng + ?Sized>(two_qubit_count: usize, rng: &mut R) -> Result<f64> {
    if two_qubit_count == 0 {
        return Err(Error::InvalidParameter("gate count must be >= 1".into()));
    }
    let eta = rng.random_range(-2.5..=-0.5);
    Ok(10f64.powf(eta) / two_qubit_count as f64)
}

/// The non-CP inverse map `(1-λ)[I] + λ D_{1,2}` as a 16x16 superoperator.
/// Trace-preserving for every real λ.
pub fn inverse_map_superoperator(lambda: f64) -> CMat {
    let mut s = identity(16) * Complex64::new(1.0 - lambda, 0.0);
    // D_{1,2} replaces the two-qubit block by its trace times I/4:
    // S[(r,c),(i,j)] = δ_{rc} δ_{ij} / 4.
    for r in 0..4 {
        for i in 0..4 {
            s[(r * 4 + r, i * 4 + i)] += Complex64::new(lambda / 4.0, 0.0);
        }
    }
    s
}

/// Per-channel probability of the 15-factor product form that reproduces
/// the summation-form gate depolarising factor exactly:
/// `(1-2p)^8 = 1 - 16ε/15`.
pub fn exact_product_p(epsilon: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 16.0 * epsilon / 15.0).powf(0.125))
}

/// The paper-style first-order choice `p = ε/15`.
pub fn first_order_product_p(epsilon: f64) -> f64 {
    epsilon / 15.0
}

/// Per-channel probability of the 3-factor single-qubit product form:
/// `(1-2p)^2 = 1 - 4 eps_s/3`.
pub fn exact_product_p_single(eps_s: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 4.0 * eps_s / 3.0).sqrt())
}

/// Superoperator of the 15-factor product form at per-channel probability `p`.
pub fn product_form_superoperator(p: f64) -> CMat {
    let mut s = identity(16);
    for code in 1u8..16 {
        let pm = local_pauli_matrix(2, code);
        let factor = identity(16) * Complex64::new(1.0 - p, 0.0)
            + pm.kronecker(&pm.map(|e| e.conj())) * Complex64::new(p, 0.0);
        s = factor * s;
    }
    s
}

fn default_r() -> f64 {
    1.0
}

/// A per-gate channel assignment with a noise amplification factor `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    GateDepolarising {
        epsilon: f64,
        #[serde(default = "default_r")]
        r: f64,
    },
    Composite {
        params: CompositeParams,
        #[serde(default = "default_r")]
        r: f64,
    },
    GateDependent {
        epsilon: f64,
        #[serde(default = "default_r")]
        r: f64,
    },
    DepolDephase {
        eps_d: f64,
        eps_z: f64,
        #[serde(default = "default_r")]
        r: f64,
    },
    GlobalDepolarising {
        epsilon: f64,
        #[serde(default = "default_r")]
        r: f64,
    },
}

impl NoiseModel {
    pub fn gate_depolarising(epsilon: f64) -> Self {
        NoiseModel::GateDepolarising { epsilon, r: 1.0 }
    }

    pub fn global_depolarising(epsilon: f64) -> Self {
        NoiseModel::GlobalDepolarising { epsilon, r: 1.0 }
    }

    pub fn depol_dephase(eps_d: f64, eps_z: f64) -> Self {
        NoiseModel::DepolDephase { eps_d, eps_z, r: 1.0 }
    }

    pub fn r(&self) -> f64 {
        match self {
            NoiseModel::GateDepolarising { r, .. }
            | NoiseModel::Composite { r, .. }
            | NoiseModel::GateDependent { r, .. }
            | NoiseModel::DepolDephase { r, .. }
            | NoiseModel::GlobalDepolarising { r, .. } => *r,
        }
    }

    /// The same model with the amplification factor multiplied by `factor`.
    /// Every first-order rate and coherent angle scales linearly with `r`.
    pub fn amplified(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            NoiseModel::GateDepolarising { r, .. }
            | NoiseModel::Composite { r, .. }
            | NoiseModel::GateDependent { r, .. }
            | NoiseModel::DepolDephase { r, .. }
            | NoiseModel::GlobalDepolarising { r, .. } => *r *= factor,
        }
        out
    }

    /// The channel attached to every two-qubit frame gate, if any.
    pub fn two_qubit_channel(&self) -> Result<Option<Channel>> {
        match self {
            NoiseModel::GateDepolarising { epsilon, r }
            | NoiseModel::GateDependent { epsilon, r } => {
                Ok(Some(gate_depolarising(epsilon * r)?))
            }
            NoiseModel::Composite { params, r } => {
                Ok(Some(composite_channel(&params.scaled(*r))?))
            }
            NoiseModel::DepolDephase { eps_d, eps_z, r } => {
                Ok(Some(depol_dephase(eps_d * r, eps_z * r)?))
            }
            NoiseModel::GlobalDepolarising { .. } => Ok(None),
        }
    }

    /// The channel attached to a bound slot gate, if any (gate-dependent
    /// model only).
    pub fn slot_channel(&self, gate: &SlotGate) -> Result<Option<Channel>> {
        match self {
            NoiseModel::GateDependent { epsilon, r } => {
                Ok(Some(gate_dependent_single(&gate.matrix(), epsilon * r)?))
            }
            _ => Ok(None),
        }
    }

    /// Whole-register depolarising rate applied after every two-qubit gate.
    pub fn global_depolarising_rate(&self) -> Option<f64> {
        match self {
            NoiseModel::GlobalDepolarising { epsilon, r } => Some(epsilon * r),
            _ => None,
        }
    }

    /// Binary product-form Pauli channels per two-qubit gate as
    /// (local code, probability) pairs, when the model is a Pauli model.
    pub fn two_qubit_product_channels(&self) -> Result<Option<Vec<(u8, f64)>>> {
        match self {
            NoiseModel::GateDepolarising { epsilon, r }
            | NoiseModel::GateDependent { epsilon, r } => {
                let p = exact_product_p(epsilon * r);
                Ok(Some((1u8..16).map(|code| (code, p)).collect()))
            }
            NoiseModel::DepolDephase { eps_d, eps_z, r } => {
                let p = exact_product_p(eps_d * r);
                let mut channels: Vec<(u8, f64)> = (1u8..16).map(|code| (code, p)).collect();
                channels.push((2, eps_z * r)); // Z on qubit a
                channels.push((8, eps_z * r)); // Z on qubit b
                Ok(Some(channels))
            }
            NoiseModel::Composite { .. } | NoiseModel::GlobalDepolarising { .. } => Ok(None),
        }
    }

    /// Binary product-form channels for a slot gate (gate-dependent model).
    pub fn slot_product_channels(&self, gate: &SlotGate) -> Result<Option<Vec<(u8, f64)>>> {
        match self {
            NoiseModel::GateDependent { epsilon, r } => {
                let eps_s = gate_dependent_rate(&gate.matrix(), epsilon * r)?;
                let p = exact_product_p_single(eps_s);
                Ok(Some(vec![(1, p), (2, p), (3, p)]))
            }
            _ => Ok(None),
        }
    }

    /// True when Clifford circuits under this model can be evaluated by the
    /// stabilizer engine (Pauli product form or global depolarising).
    pub fn is_stabilizer_compatible(&self) -> bool {
        !matches!(self, NoiseModel::Composite { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("noise model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn log_factor_table(channels: &[(u8, f64)]) -> Result<[f64; 16]> {
    let mut table = [0.0f64; 16];
    for &(code, p) in channels {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "product-form probability {p} outside [0, 1/2)"
            )));
        }
        let log = (-2.0 * p).ln_1p();
        for (obs_code, entry) in table.iter_mut().enumerate() {
            if stabilizer::codes2_anticommute(code, obs_code as u8) {
                *entry += log;
            }
        }
    }
    Ok(table)
}

/// Exact expectation of a Clifford circuit under a Pauli model or the
/// global depolarising model, via the stabilizer engine.
pub fn clifford_expectation(circuit: &Circuit, model: &NoiseModel) -> Result<f64> {
    if let Some(rate) = model.global_depolarising_rate() {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidParameter(format!(
                "global depolarising rate {rate} out of range"
            )));
        }
        let f = stabilizer::ideal_expectation(circuit)?;
        let gates = circuit.frame().two_qubit_count() as i32;
        return Ok(f64::from(f) * (1.0 - rate).powi(gates));
    }
    let two_qubit = model.two_qubit_product_channels()?.ok_or_else(|| {
        Error::InvalidParameter(
            "model has no product-form Pauli channels; use the density simulator".into(),
        )
    })?;
    let table = log_factor_table(&two_qubit)?;
    let analysis = stabilizer::analyze(circuit)?;
    if analysis.ideal_expectation == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0f64;
    for obs in &analysis.gate_observables {
        match obs {
            GateObs::TwoQubit { code, .. } => log_sum += table[usize::from(*code)],
            GateObs::Slot { slot, code, .. } => {
                if *code != 0 {
                    if let Some(channels) =
                        model.slot_product_channels(&circuit.slots()[*slot])?
                    {
                        for (chan_code, p) in channels {
                            if stabilizer::codes1_anticommute(chan_code, *code) {
                                log_sum += (-2.0 * p).ln_1p();
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(f64::from(analysis.ideal_expectation) * log_sum.exp())
}
