//! Signed Pauli strings in symplectic (x|z) form and the 24-element
//! single-qubit Clifford group with precomputed conjugation tables.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum qubit count for a [`PauliString`] (bits are packed into one `u64`).
pub const MAX_QUBITS: usize = 64;

/// Number of elements of the single-qubit Clifford group.
pub const C1_SIZE: usize = 24;

/// A single-qubit Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Symplectic bits `(x, z)` of the factor.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix of the factor.
    pub fn matrix(self) -> Mat2 {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// A 2x2 complex matrix in row-major form.
pub type Mat2 = [[Complex64; 2]; 2];

/// A signed n-qubit Pauli operator `i^phase * s_1 ⊗ ... ⊗ s_n` with the
/// factors stored as symplectic bit vectors.
///
/// The phase tracks all four powers of `i`; operators exposed as observables
/// or propagated errors are Hermitian (`phase ∈ {0, 2}`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    /// Exponent k of the global phase i^k, modulo 4.
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        Ok(Self { n, x: 0, z: 0, phase: 0 })
    }

    /// Builds a string from per-qubit factors with a +/- sign.
    pub fn from_factors(factors: &[Pauli], negative: bool) -> Result<Self> {
        let mut p = Self::identity(factors.len())?;
        for (q, &f) in factors.iter().enumerate() {
            p.set_factor(q, f);
        }
        if negative {
            p.phase = 2;
        }
        Ok(p)
    }

    /// Builds `sign * P` acting as `pauli` on qubit `qubit` and identity elsewhere.
    pub fn single(n: usize, qubit: usize, pauli: Pauli, negative: bool) -> Result<Self> {
        let mut p = Self::identity(n)?;
        p.check_qubit(qubit)?;
        p.set_factor(qubit, pauli);
        if negative {
            p.phase = 2;
        }
        Ok(p)
    }

    /// Embeds a local operator: `factors[k]` is placed on `qubits[k]`.
    pub fn embed(n: usize, qubits: &[usize], factors: &[Pauli], negative: bool) -> Result<Self> {
        if qubits.len() != factors.len() {
            return Err(Error::DimensionMismatch(
                "embed: qubit and factor counts differ".into(),
            ));
        }
        let mut p = Self::identity(n)?;
        for (&q, &f) in qubits.iter().zip(factors) {
            p.check_qubit(q)?;
            p.set_factor(q, f);
        }
        if negative {
            p.phase = 2;
        }
        Ok(p)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::OutOfRange(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Phase exponent `k` of `i^k`, modulo 4.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// Sign of a Hermitian string: `+1` or `-1`.
    pub fn sign(&self) -> Result<i8> {
        match self.phase {
            0 => Ok(1),
            2 => Ok(-1),
            _ => Err(Error::Numerical("sign of a non-Hermitian Pauli".into())),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of qubits carrying a non-identity factor.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn single_factor(&self, qubit: usize) -> Pauli {
        let x = (self.x >> qubit) & 1 == 1;
        let z = (self.z >> qubit) & 1 == 1;
        Pauli::from_bits(x, z)
    }

    pub fn set_factor(&mut self, qubit: usize, pauli: Pauli) {
        let (x, z) = pauli.bits();
        let mask = 1u64 << qubit;
        self.x = (self.x & !mask) | (u64::from(x) << qubit);
        self.z = (self.z & !mask) | (u64::from(z) << qubit);
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    /// True iff `self` and `other` anticommute.
    pub fn anticommutes(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let m = (self.x & other.z) ^ (self.z & other.x);
        m.count_ones() % 2 == 1
    }

    /// Group product `self * other` with exact phase bookkeeping.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "pauli product of {} and {} qubits",
                self.n, other.n
            )));
        }
        // Per qubit, with s(x,z) = i^{xz} X^x Z^z:
        //   s(x1,z1) s(x2,z2)
        //     = i^{x1 z1 + x2 z2 + 2 z1 x2 - (x1^x2)(z1^z2)} s(x1^x2, z1^z2).
        let t1 = (self.x & self.z).count_ones() as i64;
        let t2 = (other.x & other.z).count_ones() as i64;
        let cross = (self.z & other.x).count_ones() as i64;
        let xr = self.x ^ other.x;
        let zr = self.z ^ other.z;
        let tr = (xr & zr).count_ones() as i64;
        let k = i64::from(self.phase) + i64::from(other.phase) + t1 + t2 + 2 * cross - tr;
        Ok(PauliString {
            n: self.n,
            x: xr,
            z: zr,
            phase: k.rem_euclid(4) as u8,
        })
    }

    /// Restriction of the string to two qubits as a 4-bit code
    /// `x_a | z_a<<1 | x_b<<2 | z_b<<3` (signs dropped).
    pub fn local_code2(&self, a: usize, b: usize) -> u8 {
        let xa = ((self.x >> a) & 1) as u8;
        let za = ((self.z >> a) & 1) as u8;
        let xb = ((self.x >> b) & 1) as u8;
        let zb = ((self.z >> b) & 1) as u8;
        xa | za << 1 | xb << 2 | zb << 3
    }

    /// Restriction to one qubit as a 2-bit code `x | z<<1`.
    pub fn local_code1(&self, q: usize) -> u8 {
        let x = ((self.x >> q) & 1) as u8;
        let z = ((self.z >> q) & 1) as u8;
        x | z << 1
    }

    /// Parses the text form: optional leading `+`/`-`, then one of `IXYZ`
    /// per qubit, e.g. `-XIZ`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut chars = text.chars().peekable();
        let negative = match chars.peek() {
            Some('+') => {
                chars.next();
                false
            }
            Some('-') => {
                chars.next();
                true
            }
            _ => false,
        };
        let mut factors = Vec::new();
        for c in chars {
            factors.push(match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::Parse(format!(
                        "invalid Pauli character {other:?} in {text:?}"
                    )))
                }
            });
        }
        if factors.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {text:?}")));
        }
        Self::from_factors(&factors, negative)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            0 => write!(f, "+")?,
            1 => write!(f, "+i")?,
            2 => write!(f, "-")?,
            _ => write!(f, "-i")?,
        }
        for q in 0..self.n {
            write!(f, "{}", self.single_factor(q).as_char())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// A Clifford gate from the restricted set used by circuit frames and slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordGate {
    /// One of the 24 single-qubit Cliffords, by canonical index.
    SingleQubit { index: u8, qubit: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

impl CliffordGate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            CliffordGate::SingleQubit { qubit, .. } => (qubit, None),
            CliffordGate::Cz { a, b } => (a, Some(b)),
            CliffordGate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn max_qubit(&self) -> usize {
        let (a, b) = self.qubits();
        b.map_or(a, |b| a.max(b))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            CliffordGate::SingleQubit { index, qubit } => {
                if usize::from(index) >= C1_SIZE {
                    return Err(Error::OutOfRange(format!(
                        "single-qubit Clifford index {index} out of range"
                    )));
                }
                if qubit >= n {
                    return Err(Error::OutOfRange(format!("qubit {qubit} out of range")));
                }
            }
            CliffordGate::Cz { a, b } | CliffordGate::Cnot { control: a, target: b } => {
                if a == b {
                    return Err(Error::InvalidParameter(
                        "two-qubit gate with identical qubits".into(),
                    ));
                }
                if a >= n || b >= n {
                    return Err(Error::OutOfRange(format!(
                        "two-qubit gate ({a},{b}) out of range for {n} qubits"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Inverse gate; CZ and CNOT are involutions.
    pub fn inverse(&self) -> CliffordGate {
        match *self {
            CliffordGate::SingleQubit { index, qubit } => CliffordGate::SingleQubit {
                index: c1_inverse(index),
                qubit,
            },
            g => g,
        }
    }
}

/// Conjugation `g p g†`. Hermitian in iff Hermitian out; acts only on the
/// gate's qubits.
pub fn conjugate(gate: &CliffordGate, p: &PauliString) -> Result<PauliString> {
    if gate.max_qubit() >= p.n() {
        return Err(Error::OutOfRange(format!(
            "gate touches qubit {} beyond {} qubits",
            gate.max_qubit(),
            p.n()
        )));
    }
    let mut out = p.clone();
    match *gate {
        CliffordGate::SingleQubit { index, qubit } => {
            let factor = out.single_factor(qubit);
            if factor != Pauli::I {
                let (img, neg) = c1_action(index, factor);
                out.set_factor(qubit, img);
                if neg {
                    out.negate();
                }
            }
        }
        CliffordGate::Cz { a, b } => {
            // X_a -> X_a Z_b, X_b -> Z_a X_b, Z fixed.
            let xa = (out.x >> a) & 1;
            let xb = (out.x >> b) & 1;
            let za = (out.z >> a) & 1;
            let zb = (out.z >> b) & 1;
            if xa & xb & (za ^ zb) == 1 {
                out.negate();
            }
            out.z ^= xb << a;
            out.z ^= xa << b;
        }
        CliffordGate::Cnot { control: c, target: t } => {
            // X_c -> X_c X_t, Z_t -> Z_c Z_t.
            let xc = (out.x >> c) & 1;
            let xt = (out.x >> t) & 1;
            let zc = (out.z >> c) & 1;
            let zt = (out.z >> t) & 1;
            if xc & zt & (xt ^ zc ^ 1) == 1 {
                out.negate();
            }
            out.x ^= xc << t;
            out.z ^= zt << c;
        }
    }
    Ok(out)
}

/// All single-qubit Clifford indices `R` with `R† p R ∈ {+Z, -Z}`, or every
/// index when `p = I`.
pub fn cliffords_mapping_to_z(p: Pauli) -> Vec<u8> {
    let table = c1_table();
    (0..C1_SIZE as u8)
        .filter(|&idx| {
            if p == Pauli::I {
                true
            } else {
                // R† p R: conjugation by the inverse element.
                let (img, _) = table[usize::from(c1_inverse(idx))].action(p);
                img == Pauli::Z
            }
        })
        .collect()
}

/// One element of the single-qubit Clifford group: its unitary and its
/// conjugation action on the Pauli axes.
#[derive(Clone, Debug)]
pub struct C1Element {
    /// 2x2 unitary (global phase fixed by the generating product of H and S).
    pub matrix: Mat2,
    /// Images of (X, Y, Z) under `U P U†` as (pauli, negative-sign) pairs.
    pub images: [(Pauli, bool); 3],
}

impl C1Element {
    pub fn action(&self, p: Pauli) -> (Pauli, bool) {
        match p {
            Pauli::I => (Pauli::I, false),
            Pauli::X => self.images[0],
            Pauli::Y => self.images[1],
            Pauli::Z => self.images[2],
        }
    }
}

/// Conjugation action of element `index` on single-qubit Pauli `p`.
pub fn c1_action(index: u8, p: Pauli) -> (Pauli, bool) {
    c1_table()[usize::from(index)].action(p)
}

/// Unitary matrix of element `index`.
pub fn c1_matrix(index: u8) -> Mat2 {
    c1_table()[usize::from(index)].matrix
}

/// Index of the inverse element.
pub fn c1_inverse(index: u8) -> u8 {
    c1_inverse_table()[usize::from(index)]
}

/// Finds the element with the given action on X and Z, if any.
pub fn c1_index_by_action(x_image: (Pauli, bool), z_image: (Pauli, bool)) -> Option<u8> {
    c1_table()
        .iter()
        .position(|e| e.images[0] == x_image && e.images[2] == z_image)
        .map(|i| i as u8)
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn mat_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Matches `m` against `± {I, X, Y, Z}`; the table construction guarantees a
/// match for Clifford conjugations.
fn match_signed_pauli(m: &Mat2) -> Option<(Pauli, bool)> {
    const TOL: f64 = 1e-9;
    for p in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
        let pm = p.matrix();
        for negative in [false, true] {
            let s = if negative { -1.0 } else { 1.0 };
            let ok = (0..2).all(|r| (0..2).all(|c| (m[r][c] - pm[r][c] * s).norm() < TOL));
            if ok {
                return Some((p, negative));
            }
        }
    }
    None
}

fn conj_by_matrix(u: &Mat2, p: Pauli) -> (Pauli, bool) {
    let m = mat_mul(&mat_mul(u, &p.matrix()), &mat_adjoint(u));
    match_signed_pauli(&m).expect("Clifford conjugation of a Pauli must be a signed Pauli")
}

fn c1_table() -> &'static [C1Element; C1_SIZE] {
    static TABLE: OnceLock<[C1Element; C1_SIZE]> = OnceLock::new();
    TABLE.get_or_init(build_c1_table)
}

fn c1_inverse_table() -> &'static [u8; C1_SIZE] {
    static INV: OnceLock<[u8; C1_SIZE]> = OnceLock::new();
    INV.get_or_init(|| {
        let table = c1_table();
        let mut inv = [0u8; C1_SIZE];
        for (i, e) in table.iter().enumerate() {
            let j = table
                .iter()
                .position(|cand| {
                    // cand ∘ e = identity action.
                    let (px, nx) = cand.action(e.images[0].0);
                    let (pz, nz) = cand.action(e.images[2].0);
                    px == Pauli::X && pz == Pauli::Z && !(nx ^ e.images[0].1)
                        && !(nz ^ e.images[2].1)
                })
                .expect("group closure guarantees an inverse");
            inv[i] = j as u8;
        }
        inv
    })
}

/// Generates the 24 elements by breadth-first closure of {H, S} starting
/// from the identity; the resulting order is the canonical index order
/// (index 0 is the identity).
fn build_c1_table() -> [C1Element; C1_SIZE] {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let h: Mat2 = [
        [Complex64::new(inv_sqrt2, 0.0), Complex64::new(inv_sqrt2, 0.0)],
        [Complex64::new(inv_sqrt2, 0.0), Complex64::new(-inv_sqrt2, 0.0)],
    ];
    let s: Mat2 = [[l, o], [o, Complex64::new(0.0, 1.0)]];

    let action_key = |m: &Mat2| -> (u8, u8) {
        let encode = |(p, neg): (Pauli, bool)| {
            let code = match p {
                Pauli::I => 0u8,
                Pauli::X => 1,
                Pauli::Y => 2,
                Pauli::Z => 3,
            };
            code | (u8::from(neg) << 2)
        };
        (encode(conj_by_matrix(m, Pauli::X)), encode(conj_by_matrix(m, Pauli::Z)))
    };

    let identity: Mat2 = [[l, o], [o, l]];
    let mut elements: Vec<Mat2> = vec![identity];
    let mut seen: Vec<(u8, u8)> = vec![action_key(&identity)];
    let mut head = 0;
    while head < elements.len() {
        let current = elements[head];
        head += 1;
        for gen in [&h, &s] {
            let candidate = mat_mul(gen, &current);
            let key = action_key(&candidate);
            if !seen.contains(&key) {
                seen.push(key);
                elements.push(candidate);
            }
        }
    }
    assert_eq!(elements.len(), C1_SIZE, "closure of {{H, S}} must have 24 elements");

    let table: Vec<C1Element> = elements
        .into_iter()
        .map(|m| C1Element {
            images: [
                conj_by_matrix(&m, Pauli::X),
                conj_by_matrix(&m, Pauli::Y),
                conj_by_matrix(&m, Pauli::Z),
            ],
            matrix: m,
        })
        .collect();
    table.try_into().map_err(|_| ()).expect("exactly 24 elements")
}
