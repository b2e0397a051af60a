//! A self-contained dense-matrix oracle: complex matrices built from
//! scratch, independent of the library's bit-vector algebra, used to verify
//! Pauli products, Clifford conjugation and circuit evaluation.

use num_complex::Complex64;
use qem_ics::circuit::{Circuit, Op};
use qem_ics::pauli::{c1_matrix, CliffordGate, Pauli, PauliString};

pub type Dense = Vec<Complex64>;

pub fn zeros(dim: usize) -> Dense {
    vec![Complex64::new(0.0, 0.0); dim * dim]
}

pub fn identity(dim: usize) -> Dense {
    let mut m = zeros(dim);
    for i in 0..dim {
        m[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &Dense, b: &Dense, dim: usize) -> Dense {
    let mut out = zeros(dim);
    for r in 0..dim {
        for k in 0..dim {
            let v = a[r * dim + k];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += v * b[k * dim + c];
            }
        }
    }
    out
}

pub fn adjoint(a: &Dense, dim: usize) -> Dense {
    let mut out = zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            out[c * dim + r] = a[r * dim + c].conj();
        }
    }
    out
}

/// Kronecker product with `a` indexing the high bits.
pub fn kron(a: &Dense, da: usize, b: &Dense, db: usize) -> Dense {
    let dim = da * db;
    let mut out = zeros(dim);
    for ra in 0..da {
        for ca in 0..da {
            for rb in 0..db {
                for cb in 0..db {
                    out[(ra * db + rb) * dim + (ca * db + cb)] =
                        a[ra * da + ca] * b[rb * db + cb];
                }
            }
        }
    }
    out
}

pub fn single_pauli(p: Pauli) -> Dense {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::I => vec![l, o, o, l],
        Pauli::X => vec![o, l, l, o],
        Pauli::Y => vec![o, -i, i, o],
        Pauli::Z => vec![l, o, o, -l],
    }
}

/// Dense form of a signed Pauli string; qubit q controls basis bit q.
pub fn pauli_dense(p: &PauliString) -> Dense {
    let mut m = vec![Complex64::new(1.0, 0.0)];
    let mut dim = 1;
    for q in 0..p.n() {
        m = kron(&single_pauli(p.single_factor(q)), 2, &m, dim);
        dim *= 2;
    }
    let phase = match p.phase_exponent() {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    for entry in &mut m {
        *entry *= phase;
    }
    m
}

/// Dense unitary of a gate on an n-qubit register.
pub fn gate_dense(gate: &CliffordGate, n: usize) -> Dense {
    let dim = 1usize << n;
    match *gate {
        CliffordGate::SingleQubit { index, qubit } => {
            let u2 = c1_matrix(index);
            let local = vec![u2[0][0], u2[0][1], u2[1][0], u2[1][1]];
            embed_single(&local, qubit, n)
        }
        CliffordGate::Cz { a, b } => {
            let mut m = zeros(dim);
            for i in 0..dim {
                let sign = if (i >> a) & 1 == 1 && (i >> b) & 1 == 1 { -1.0 } else { 1.0 };
                m[i * dim + i] = Complex64::new(sign, 0.0);
            }
            m
        }
        CliffordGate::Cnot { control, target } => {
            let mut m = zeros(dim);
            for i in 0..dim {
                let j = i ^ (((i >> control) & 1) << target);
                m[j * dim + i] = Complex64::new(1.0, 0.0);
            }
            m
        }
    }
}

pub fn embed_single(local: &Dense, qubit: usize, n: usize) -> Dense {
    let mut m = vec![Complex64::new(1.0, 0.0)];
    let mut dim = 1;
    for q in 0..n {
        let factor = if q == qubit { local.clone() } else { identity(2) };
        m = kron(&factor, 2, &m, dim);
        dim *= 2;
    }
    m
}

/// Product unitary of a fully bound circuit (last gate leftmost).
pub fn circuit_unitary(circuit: &Circuit) -> Dense {
    let n = circuit.n();
    let dim = 1usize << n;
    let mut u = identity(dim);
    for op in circuit.ops() {
        let g = match op {
            Op::TwoQubit(g) => gate_dense(&g, n),
            Op::Slot { qubit, gate } => {
                let m2 = gate.matrix();
                embed_single(&vec![m2[0][0], m2[0][1], m2[1][0], m2[1][1]], qubit, n)
            }
        };
        u = mat_mul(&g, &u, dim);
    }
    u
}

pub fn conjugate_dense(u: &Dense, m: &Dense, dim: usize) -> Dense {
    mat_mul(&mat_mul(u, m, dim), &adjoint(u, dim), dim)
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Matches a dense matrix against every signed Pauli string on n qubits;
/// usable up to n = 4.
pub fn match_pauli_dense(m: &Dense, n: usize) -> Option<PauliString> {
    for bits in 0..(1u64 << (2 * n)) {
        let factors: Vec<Pauli> = (0..n)
            .map(|q| {
                let x = (bits >> (2 * q)) & 1 == 1;
                let z = (bits >> (2 * q + 1)) & 1 == 1;
                Pauli::from_bits(x, z)
            })
            .collect();
        for negative in [false, true] {
            let candidate = PauliString::from_factors(&factors, negative).unwrap();
            if max_diff(m, &pauli_dense(&candidate)) < 1e-9 {
                return Some(candidate);
            }
        }
    }
    None
}
