//! Exact density-matrix evolution of bound circuits under any noise model,
//! plus a pure-state path for noiseless expectation values.
//!
//! States are dense 2^n x 2^n matrices (n <= 12). Channels are applied as
//! local superoperators contracted over the gate's qubits.

use num_complex::Complex64;

use crate::circuit::{Circuit, Op};
use crate::noise::{inverse_map_superoperator, Channel, NoiseModel};
use crate::pauli::{CliffordGate, Mat2, PauliString};
use crate::{Error, Result};

/// Maximum qubit count of the dense simulator.
pub const MAX_DENSITY_QUBITS: usize = 12;

/// A 2^n x 2^n density matrix, row-major.
#[derive(Clone, Debug)]
pub struct DensityState {
    n: usize,
    dim: usize,
    mat: Vec<Complex64>,
}

fn check_density_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSITY_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "density simulation supports 1..={MAX_DENSITY_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

/// Expands `k` by inserting zero bits at positions `lo < hi`.
#[inline]
fn insert_two_bits(k: usize, lo: usize, hi: usize) -> usize {
    let low = k & ((1 << lo) - 1);
    let mid = (k >> lo) & ((1 << (hi - 1 - lo)) - 1);
    let high = k >> (hi - 1);
    low | (mid << (lo + 1)) | (high << (hi + 1))
}

impl DensityState {
    /// The computational-basis state |0…0><0…0|.
    pub fn zero_state(n: usize) -> Result<Self> {
        check_density_n(n)?;
        let dim = 1 << n;
        let mut mat = vec![Complex64::new(0.0, 0.0); dim * dim];
        mat[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, dim, mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.mat[i * self.dim + i]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.mat[r * self.dim + c] - self.mat[c * self.dim + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn apply_single_unitary(&mut self, qubit: usize, u: &Mat2) {
        let dim = self.dim;
        let mask = 1usize << qubit;
        // Left multiply rows.
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c in 0..dim {
                let a = self.mat[r0 * dim + c];
                let b = self.mat[r1 * dim + c];
                self.mat[r0 * dim + c] = u[0][0] * a + u[0][1] * b;
                self.mat[r1 * dim + c] = u[1][0] * a + u[1][1] * b;
            }
        }
        // Right multiply columns by U†.
        for c0 in 0..dim {
            if c0 & mask != 0 {
                continue;
            }
            let c1 = c0 | mask;
            for r in 0..dim {
                let a = self.mat[r * dim + c0];
                let b = self.mat[r * dim + c1];
                self.mat[r * dim + c0] = a * u[0][0].conj() + b * u[0][1].conj();
                self.mat[r * dim + c1] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let dim = self.dim;
        let mask = (1usize << a) | (1usize << b);
        for r in 0..dim {
            let sr = (r & mask) == mask;
            for c in 0..dim {
                let sc = (c & mask) == mask;
                if sr ^ sc {
                    self.mat[r * dim + c] = -self.mat[r * dim + c];
                }
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let dim = self.dim;
        let perm = |x: usize| x ^ (((x >> control) & 1) << target);
        for r in 0..dim {
            let pr = perm(r);
            if pr > r {
                for c in 0..dim {
                    self.mat.swap(r * dim + c, pr * dim + c);
                }
            }
        }
        for c in 0..dim {
            let pc = perm(c);
            if pc > c {
                for r in 0..dim {
                    self.mat.swap(r * dim + c, r * dim + pc);
                }
            }
        }
    }

    pub fn apply_clifford_gate(&mut self, gate: &CliffordGate) {
        match *gate {
            CliffordGate::SingleQubit { index, qubit } => {
                self.apply_single_unitary(qubit, &crate::pauli::c1_matrix(index));
            }
            CliffordGate::Cz { a, b } => self.apply_cz(a, b),
            CliffordGate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// Applies a one-qubit superoperator (4x4, row-major over local
    /// vectorised indices `r_local*2 + c_local`).
    pub fn apply_superop_1q(&mut self, qubit: usize, s: &[Complex64]) {
        debug_assert_eq!(s.len(), 16);
        let dim = self.dim;
        let mask = 1usize << qubit;
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c0 in 0..dim {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let v = [
                    self.mat[r0 * dim + c0],
                    self.mat[r0 * dim + c1],
                    self.mat[r1 * dim + c0],
                    self.mat[r1 * dim + c1],
                ];
                let mut w = [Complex64::new(0.0, 0.0); 4];
                for (o, out) in w.iter_mut().enumerate() {
                    for (i, vi) in v.iter().enumerate() {
                        *out += s[o * 4 + i] * vi;
                    }
                }
                self.mat[r0 * dim + c0] = w[0];
                self.mat[r0 * dim + c1] = w[1];
                self.mat[r1 * dim + c0] = w[2];
                self.mat[r1 * dim + c1] = w[3];
            }
        }
    }

    /// Applies a two-qubit superoperator (16x16, row-major over local
    /// vectorised indices `l_row*4 + l_col`, local basis `bit_a + 2 bit_b`).
    pub fn apply_superop_2q(&mut self, a: usize, b: usize, s: &[Complex64]) {
        debug_assert_eq!(s.len(), 256);
        let dim = self.dim;
        let rest = dim >> 2;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let offsets = {
            let mut offs = [0usize; 4];
            for (l, entry) in offs.iter_mut().enumerate() {
                *entry = ((l & 1) << a) | ((l >> 1) << b);
            }
            offs
        };
        let mut v = [Complex64::new(0.0, 0.0); 16];
        let mut w = [Complex64::new(0.0, 0.0); 16];
        for r_rest in 0..rest {
            let r_base = insert_two_bits(r_rest, lo, hi);
            for c_rest in 0..rest {
                let c_base = insert_two_bits(c_rest, lo, hi);
                for lr in 0..4 {
                    let row = r_base | offsets[lr];
                    for lc in 0..4 {
                        v[lr * 4 + lc] = self.mat[row * dim + (c_base | offsets[lc])];
                    }
                }
                for (o, out) in w.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let row = &s[o * 16..o * 16 + 16];
                    for (i, vi) in v.iter().enumerate() {
                        acc += row[i] * vi;
                    }
                    *out = acc;
                }
                for lr in 0..4 {
                    let row = r_base | offsets[lr];
                    for lc in 0..4 {
                        self.mat[row * dim + (c_base | offsets[lc])] = w[lr * 4 + lc];
                    }
                }
            }
        }
    }

    /// Whole-register depolarising: `rho <- (1-p) rho + p Tr(rho) I / 2^n`.
    pub fn apply_global_depolarising(&mut self, p: f64) {
        let tr = self.trace();
        for entry in &mut self.mat {
            *entry *= 1.0 - p;
        }
        let add = tr * (p / self.dim as f64);
        for i in 0..self.dim {
            self.mat[i * self.dim + i] += add;
        }
    }

    /// Applies the (possibly non-CP) inverse map `(1-λ)[I] + λ D_{1,2}` on a
    /// qubit pair. Hermiticity and trace are preserved for every real λ.
    pub fn apply_inverse_map(&mut self, lambda: f64, qubits: (usize, usize)) {
        let s = inverse_map_superoperator(lambda);
        let flat: Vec<Complex64> = s.transpose().iter().copied().collect();
        // nalgebra stores column-major; transpose+iterate yields row-major.
        self.apply_superop_2q(qubits.0, qubits.1, &flat);
    }

    /// `Tr(Q rho)` for a Hermitian Pauli observable.
    pub fn expectation(&self, q: &PauliString) -> Result<f64> {
        expectation_of(&self.mat, self.dim, self.n, q)
    }

    /// `(Tr(Q rho^2), Tr(rho^2))`.
    pub fn purity_pair(&self, q: &PauliString) -> Result<(f64, f64)> {
        if q.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "observable on {} qubits for {} qubit state",
                q.n(),
                self.n
            )));
        }
        let dim = self.dim;
        let mut sq = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let a = self.mat[r * dim + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row_k = &self.mat[k * dim..(k + 1) * dim];
                let out = &mut sq[r * dim..(r + 1) * dim];
                for (o, m) in out.iter_mut().zip(row_k) {
                    *o += a * m;
                }
            }
        }
        let purity = (0..dim).map(|i| sq[i * dim + i].re).sum();
        let q_sq = expectation_of(&sq, dim, self.n, q)?;
        Ok((q_sq, purity))
    }
}

fn expectation_of(mat: &[Complex64], dim: usize, n: usize, q: &PauliString) -> Result<f64> {
    if q.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "observable on {} qubits for {n} qubit state",
            q.n()
        )));
    }
    if !q.is_hermitian() {
        return Err(Error::InvalidParameter("observable must be Hermitian".into()));
    }
    let x = q.x_bits() as usize;
    let z = q.z_bits() as usize;
    // i^k X^x Z^z form: k = phase + |x & z|.
    let k = (u32::from(q.phase_exponent()) + (q.x_bits() & q.z_bits()).count_ones()) % 4;
    let phase = match k {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..dim {
        let sign = if ((m & z).count_ones()) % 2 == 1 { -1.0 } else { 1.0 };
        acc += mat[m * dim + (m ^ x)] * sign;
    }
    acc *= phase;
    Ok(acc.re)
}

fn flatten_superop(channel: &Channel) -> Vec<Complex64> {
    let s = channel.superoperator();
    s.transpose().iter().copied().collect()
}

struct PreparedNoise {
    two_qubit: Option<Vec<Complex64>>,
    global_rate: Option<f64>,
    gate_dependent: bool,
}

fn prepare_noise(model: &NoiseModel) -> Result<PreparedNoise> {
    let two_qubit = model.two_qubit_channel()?.map(|c| flatten_superop(&c));
    Ok(PreparedNoise {
        two_qubit,
        global_rate: model.global_depolarising_rate(),
        gate_dependent: matches!(model, NoiseModel::GateDependent { .. }),
    })
}

fn evolve(circuit: &Circuit, noise: Option<&NoiseModel>, pec_lambda: Option<f64>) -> Result<DensityState> {
    check_density_n(circuit.n())?;
    let mut state = DensityState::zero_state(circuit.n())?;
    let prepared = match noise {
        Some(model) => Some((model, prepare_noise(model)?)),
        None => None,
    };
    let pec = pec_lambda.map(inverse_map_superoperator).map(|s| {
        s.transpose().iter().copied().collect::<Vec<Complex64>>()
    });
    for op in circuit.ops() {
        match op {
            Op::TwoQubit(gate) => {
                state.apply_clifford_gate(&gate);
                let (a, b) = gate.qubits();
                let b = b.expect("two-qubit frame gate");
                if let Some((_, prep)) = &prepared {
                    if let Some(rate) = prep.global_rate {
                        state.apply_global_depolarising(rate);
                    } else if let Some(s) = &prep.two_qubit {
                        state.apply_superop_2q(a, b, s);
                    }
                }
                if let Some(s) = &pec {
                    state.apply_superop_2q(a, b, s);
                }
            }
            Op::Slot { qubit, gate } => {
                state.apply_single_unitary(qubit, &gate.matrix());
                if let Some((model, prep)) = &prepared {
                    if prep.gate_dependent {
                        if let Some(channel) = model.slot_channel(gate)? {
                            state.apply_superop_1q(qubit, &flatten_superop(&channel));
                        }
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Evolves |0…0><0…0| through the circuit: each gate's unitary followed by
/// its noise channel. Slot gates are noiseless except under the
/// gate-dependent model.
pub fn run(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityState> {
    evolve(circuit, Some(noise), None)
}

/// Noiseless density evolution.
pub fn run_pure(circuit: &Circuit) -> Result<DensityState> {
    evolve(circuit, None, None)
}

/// Evolution with the inverse map `(1-λ)[I] + λ D_{1,2}` applied after every
/// noisy two-qubit gate (deterministic probabilistic error cancellation).
pub fn run_with_pec(circuit: &Circuit, noise: &NoiseModel, lambda: f64) -> Result<DensityState> {
    evolve(circuit, Some(noise), Some(lambda))
}

/// Noisy expectation through the cheapest exact route: the stabilizer
/// engine for Clifford circuits under Pauli-compatible models, the dense
/// simulator otherwise.
pub fn noisy_expectation(circuit: &Circuit, noise: &NoiseModel) -> Result<f64> {
    if circuit.is_clifford() && noise.is_stabilizer_compatible() {
        return crate::noise::clifford_expectation(circuit, noise);
    }
    run(circuit, noise)?.expectation(circuit.observable())
}

/// A pure state vector, used for noiseless expectation values of arbitrary
/// bound circuits.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Result<Self> {
        if n == 0 || n > 26 {
            return Err(Error::InvalidParameter(format!("state vector size {n} unsupported")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn apply_single(&mut self, qubit: usize, u: &Mat2) {
        let mask = 1usize << qubit;
        for i0 in 0..self.amps.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let a = self.amps[i0];
            let b = self.amps[i1];
            self.amps[i0] = u[0][0] * a + u[0][1] * b;
            self.amps[i1] = u[1][0] * a + u[1][1] * b;
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    pub fn expectation(&self, q: &PauliString) -> Result<f64> {
        if q.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "observable on {} qubits for {} qubit state",
                q.n(),
                self.n
            )));
        }
        let x = q.x_bits() as usize;
        let z = q.z_bits() as usize;
        let k = (u32::from(q.phase_exponent()) + (q.x_bits() & q.z_bits()).count_ones()) % 4;
        let phase = match k {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..self.amps.len() {
            let sign = if ((m & z).count_ones()) % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[m ^ x].conj() * self.amps[m] * sign;
        }
        Ok((acc * phase).re)
    }
}

/// Noiseless expectation `<0|U† Q U|0>` of any bound circuit via a state
/// vector; for Clifford circuits this matches the stabilizer engine.
pub fn ideal_unitary_expectation(circuit: &Circuit) -> Result<f64> {
    let mut psi = StateVector::zero_state(circuit.n())?;
    for op in circuit.ops() {
        match op {
            Op::TwoQubit(gate) => match gate {
                CliffordGate::Cz { a, b } => psi.apply_cz(a, b),
                CliffordGate::Cnot { control, target } => psi.apply_cnot(control, target),
                CliffordGate::SingleQubit { index, qubit } => {
                    psi.apply_single(qubit, &crate::pauli::c1_matrix(index))
                }
            },
            Op::Slot { qubit, gate } => psi.apply_single(qubit, &gate.matrix()),
        }
    }
    psi.expectation(circuit.observable())
}
