//! Circuits over a fixed frame of two-qubit Clifford gates with variable
//! single-qubit slots, the three frame families used in the scaling
//! experiments, and JSON serialization.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::pauli::{c1_matrix, CliffordGate, Mat2, Pauli, PauliString};
use crate::{Error, Result};

/// One position in a circuit frame: a fixed two-qubit Clifford gate or a
/// variable single-qubit slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameElement {
    TwoQubit(CliffordGate),
    Slot(usize),
}

/// The fixed pattern of two-qubit Clifford gates, slot positions and the
/// measured observable. The first `n` elements are one slot per qubit (the
/// layer right after initialisation).
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitFrame {
    n: usize,
    elements: Vec<FrameElement>,
    observable: PauliString,
    slot_elements: Vec<usize>,
}

impl CircuitFrame {
    pub fn new(n: usize, elements: Vec<FrameElement>, observable: PauliString) -> Result<Self> {
        if observable.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "observable on {} qubits for a {n}-qubit frame",
                observable.n()
            )));
        }
        if !observable.is_hermitian() {
            return Err(Error::InvalidParameter("observable must be Hermitian".into()));
        }
        if elements.len() < n {
            return Err(Error::InvalidParameter(
                "frame must start with one slot per qubit".into(),
            ));
        }
        let mut first_layer: Vec<usize> = Vec::with_capacity(n);
        for element in &elements[..n] {
            match element {
                FrameElement::Slot(q) => first_layer.push(*q),
                _ => {
                    return Err(Error::InvalidParameter(
                        "frame must start with one slot per qubit".into(),
                    ))
                }
            }
        }
        first_layer.sort_unstable();
        if first_layer != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(
                "first slot layer must cover every qubit exactly once".into(),
            ));
        }
        let mut slot_elements = Vec::new();
        for (i, element) in elements.iter().enumerate() {
            match element {
                FrameElement::Slot(q) => {
                    if *q >= n {
                        return Err(Error::OutOfRange(format!("slot qubit {q} out of range")));
                    }
                    slot_elements.push(i);
                }
                FrameElement::TwoQubit(g) => {
                    match g {
                        CliffordGate::Cz { .. } | CliffordGate::Cnot { .. } => {}
                        CliffordGate::SingleQubit { .. } => {
                            return Err(Error::InvalidParameter(
                                "frame gates must be two-qubit CZ or CNOT".into(),
                            ))
                        }
                    }
                    g.validate(n)?;
                }
            }
        }
        Ok(Self { n, elements, observable, slot_elements })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[FrameElement] {
        &self.elements
    }

    pub fn observable(&self) -> &PauliString {
        &self.observable
    }

    /// Total number of slots, `N_R`.
    pub fn slot_count(&self) -> usize {
        self.slot_elements.len()
    }

    /// Element index of each slot, in circuit order.
    pub fn slot_elements(&self) -> &[usize] {
        &self.slot_elements
    }

    pub fn two_qubit_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, FrameElement::TwoQubit(_)))
            .count()
    }

    /// Qubit of the slot with the given slot index.
    pub fn slot_qubit(&self, slot: usize) -> usize {
        match self.elements[self.slot_elements[slot]] {
            FrameElement::Slot(q) => q,
            _ => unreachable!("slot_elements indexes slots"),
        }
    }
}

/// A bound single-qubit slot gate.
#[derive(Clone, Debug, PartialEq)]
pub enum SlotGate {
    /// One of the 24 single-qubit Cliffords, by canonical index.
    Clifford(u8),
    /// An arbitrary 2x2 unitary.
    Unitary(Mat2),
}

impl SlotGate {
    pub fn matrix(&self) -> Mat2 {
        match self {
            SlotGate::Clifford(idx) => c1_matrix(*idx),
            SlotGate::Unitary(m) => *m,
        }
    }
}

const UNITARITY_TOL: f64 = 1e-12;

fn unitarity_defect(m: &Mat2) -> f64 {
    // max-norm of U†U - I
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let mut entry = Complex64::new(0.0, 0.0);
            for row in m {
                entry += row[r].conj() * row[c];
            }
            let target = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((entry - target).norm());
        }
    }
    worst
}

/// A frame with every slot bound to a gate.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    frame: Arc<CircuitFrame>,
    slots: Vec<SlotGate>,
}

impl Circuit {
    pub fn new(frame: Arc<CircuitFrame>, slots: Vec<SlotGate>) -> Result<Self> {
        if slots.len() != frame.slot_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} slot gates for a frame with {} slots",
                slots.len(),
                frame.slot_count()
            )));
        }
        for gate in &slots {
            match gate {
                SlotGate::Clifford(idx) => {
                    if usize::from(*idx) >= crate::pauli::C1_SIZE {
                        return Err(Error::OutOfRange(format!(
                            "single-qubit Clifford index {idx} out of range"
                        )));
                    }
                }
                SlotGate::Unitary(m) => {
                    let defect = unitarity_defect(m);
                    if defect > UNITARITY_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "slot matrix is not unitary (defect {defect:.3e})"
                        )));
                    }
                }
            }
        }
        Ok(Self { frame, slots })
    }

    pub fn frame(&self) -> &Arc<CircuitFrame> {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.frame.n
    }

    pub fn observable(&self) -> &PauliString {
        &self.frame.observable
    }

    pub fn slots(&self) -> &[SlotGate] {
        &self.slots
    }

    pub fn is_clifford(&self) -> bool {
        self.slots.iter().all(|s| matches!(s, SlotGate::Clifford(_)))
    }

    /// Number of frame elements (gates plus slots).
    pub fn element_count(&self) -> usize {
        self.frame.elements.len()
    }

    /// Resolves element `i` to a concrete operation.
    pub fn op(&self, element: usize) -> Op<'_> {
        match self.frame.elements[element] {
            FrameElement::TwoQubit(g) => Op::TwoQubit(g),
            FrameElement::Slot(q) => {
                let slot = self
                    .frame
                    .slot_elements
                    .binary_search(&element)
                    .expect("element is a slot");
                Op::Slot { qubit: q, gate: &self.slots[slot] }
            }
        }
    }

    pub fn ops(&self) -> impl Iterator<Item = Op<'_>> + '_ {
        (0..self.element_count()).map(|i| self.op(i))
    }
}

/// A resolved circuit operation.
#[derive(Clone, Copy, Debug)]
pub enum Op<'a> {
    TwoQubit(CliffordGate),
    Slot { qubit: usize, gate: &'a SlotGate },
}

/// Which two-qubit gate a generated frame uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoQubitKind {
    #[default]
    Cz,
    Cnot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    PeriodicCycling,
    LinearNetwork,
    AllToAll,
}

/// Description of one generated frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameFamily {
    pub kind: FamilyKind,
    pub n: usize,
    pub two_qubit_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub gate: TwoQubitKind,
    /// Drops the wrap-around gate of the periodic-cycling pattern, matching
    /// devices without a qubit ring.
    #[serde(default)]
    pub open_chain: bool,
}

impl FrameFamily {
    pub fn new(kind: FamilyKind, n: usize, two_qubit_count: usize, seed: u64) -> Self {
        Self { kind, n, two_qubit_count, seed, gate: TwoQubitKind::Cz, open_chain: false }
    }
}

fn two_qubit_gate(kind: TwoQubitKind, a: usize, b: usize) -> CliffordGate {
    match kind {
        TwoQubitKind::Cz => CliffordGate::Cz { a, b },
        TwoQubitKind::Cnot => CliffordGate::Cnot { control: a, target: b },
    }
}

/// Builds the frame of a family: leading slot layer, the family's two-qubit
/// pattern with a slot on both qubits after every gate, and a trailing slot
/// layer before measurement.
pub fn build_frame(family: &FrameFamily) -> Result<CircuitFrame> {
    let n = family.n;
    if !(2..=crate::pauli::MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidParameter(format!("family qubit count {n} unsupported")));
    }
    if family.two_qubit_count == 0 {
        return Err(Error::InvalidParameter("two_qubit_count must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(family.seed);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(family.two_qubit_count);
    match family.kind {
        FamilyKind::PeriodicCycling => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidParameter(
                    "periodic-cycling circuits require an even qubit count".into(),
                ));
            }
            // Two alternating layers per period: (2i, 2i+1) then (2i+1, 2i+2 mod n).
            let mut layer_a = true;
            while pairs.len() < family.two_qubit_count {
                let before = pairs.len();
                for i in 0..n / 2 {
                    let (a, b) = if layer_a {
                        (2 * i, 2 * i + 1)
                    } else {
                        (2 * i + 1, (2 * i + 2) % n)
                    };
                    if family.open_chain && !layer_a && b == 0 {
                        continue;
                    }
                    pairs.push((a, b));
                    if pairs.len() == family.two_qubit_count {
                        break;
                    }
                }
                layer_a = !layer_a;
                if pairs.len() == before {
                    return Err(Error::InvalidParameter(
                        "degenerate periodic-cycling layer".into(),
                    ));
                }
            }
        }
        FamilyKind::LinearNetwork => {
            for _ in 0..family.two_qubit_count {
                let i = rng.random_range(1..n);
                pairs.push((i - 1, i));
            }
        }
        FamilyKind::AllToAll => {
            for _ in 0..family.two_qubit_count {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                pairs.push((a, b));
            }
        }
    }

    let observable = match family.kind {
        FamilyKind::PeriodicCycling => PauliString::single(n, 0, Pauli::Z, false)?,
        FamilyKind::LinearNetwork | FamilyKind::AllToAll => loop {
            let factors: Vec<Pauli> = (0..n)
                .map(|_| if rng.random::<bool>() { Pauli::Z } else { Pauli::I })
                .collect();
            let candidate = PauliString::from_factors(&factors, false)?;
            if !candidate.is_identity() {
                break candidate;
            }
        },
    };

    let mut elements: Vec<FrameElement> = (0..n).map(FrameElement::Slot).collect();
    for (a, b) in pairs {
        elements.push(FrameElement::TwoQubit(two_qubit_gate(family.gate, a, b)));
        elements.push(FrameElement::Slot(a));
        elements.push(FrameElement::Slot(b));
    }
    elements.extend((0..n).map(FrameElement::Slot));
    CircuitFrame::new(n, elements, observable)
}

/// Draws a Haar-random 2x2 unitary: the first column is a normalised
/// complex Gaussian vector, the second is its exact orthogonal complement
/// times the (uniform) phase of the second Gaussian column's residual.
pub fn haar_unitary_2x2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for row in &mut g {
        for entry in row.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *entry = Complex64::new(re, im);
        }
    }
    let norm0 = (g[0][0].norm_sqr() + g[1][0].norm_sqr()).sqrt();
    let q0 = [g[0][0] / norm0, g[1][0] / norm0];
    // The complement (-conj(b), conj(a)) is orthogonal to q0 exactly in
    // floating point; the residual of the second Gaussian column along it
    // supplies the uniform relative phase.
    let c = [-q0[1].conj(), q0[0].conj()];
    let overlap = c[0].conj() * g[0][1] + c[1].conj() * g[1][1];
    let phase = overlap / overlap.norm();
    [[q0[0], c[0] * phase], [q0[1], c[1] * phase]]
}

/// Binds every slot to an independent Haar-random single-qubit unitary.
pub fn bind_random_unitary<R: Rng + ?Sized>(frame: &Arc<CircuitFrame>, rng: &mut R) -> Circuit {
    let slots = (0..frame.slot_count())
        .map(|_| SlotGate::Unitary(haar_unitary_2x2(rng)))
        .collect();
    Circuit::new(frame.clone(), slots).expect("generated slots are unitary")
}

/// Binds every slot to an independent uniform single-qubit Clifford.
pub fn bind_random_clifford<R: Rng + ?Sized>(frame: &Arc<CircuitFrame>, rng: &mut R) -> Circuit {
    let slots = (0..frame.slot_count())
        .map(|_| SlotGate::Clifford(rng.random_range(0..crate::pauli::C1_SIZE as u8)))
        .collect();
    Circuit::new(frame.clone(), slots).expect("clifford indices in range")
}

/// Rotation by `angle` about `axis` (unit vector), `exp(-i angle/2 axis·sigma)`.
pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> Mat2 {
    let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
    let i = Complex64::new(0.0, 1.0);
    [
        [
            Complex64::new(c, 0.0) - i * s * axis[2],
            -i * s * Complex64::new(axis[0], -axis[1]),
        ],
        [
            -i * s * Complex64::new(axis[0], axis[1]),
            Complex64::new(c, 0.0) + i * s * axis[2],
        ],
    ]
}

/// Generates an error-sensitive Clifford circuit and perturbs every slot
/// gate by a random rotation with angle uniform in
/// `[-rotation_scale, rotation_scale]` about a random axis. At scale 0 the
/// error-sensitive Clifford circuit itself is returned, so the ideal
/// expectation is close to ±1 for small scales.
pub fn bind_near_one_fc<R: Rng + ?Sized>(
    frame: &Arc<CircuitFrame>,
    rotation_scale: f64,
    rng: &mut R,
) -> Result<Circuit> {
    if rotation_scale < 0.0 {
        return Err(Error::InvalidParameter("rotation_scale must be >= 0".into()));
    }
    let pattern = crate::ics::SlotPattern::random(frame, rng);
    let es = crate::ics::es_circuit(frame, &pattern, rng)?;
    if rotation_scale == 0.0 {
        return Ok(es);
    }
    let slots = es
        .slots()
        .iter()
        .map(|gate| {
            let axis: [f64; 3] = UnitSphere.sample(rng);
            let angle = rng.random_range(-rotation_scale..=rotation_scale);
            let rot = rotation_matrix(axis, angle);
            let base = gate.matrix();
            let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] = rot[r][0] * base[0][c] + rot[r][1] * base[1][c];
                }
            }
            SlotGate::Unitary(m)
        })
        .collect();
    Circuit::new(es.frame().clone(), slots)
}

// --- JSON forms -----------------------------------------------------------
//
// Frame: {"n":…, "observable":"-ZIZ…", "elements":[{"cz":[a,b]} | {"cnot":[c,t]} | {"slot":q}]}
// Circuit: the frame fields plus "slots":[{"c1":k} | {"u":[[re,im]x4]}]

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ElementJson {
    Cz([usize; 2]),
    Cnot([usize; 2]),
    Slot(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SlotJson {
    C1(u8),
    U([[f64; 2]; 4]),
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    n: usize,
    observable: String,
    elements: Vec<ElementJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slots: Option<Vec<SlotJson>>,
}

fn frame_to_json(frame: &CircuitFrame, slots: Option<&[SlotGate]>) -> FrameJson {
    FrameJson {
        n: frame.n,
        observable: frame.observable.to_string(),
        elements: frame
            .elements
            .iter()
            .map(|e| match e {
                FrameElement::TwoQubit(CliffordGate::Cz { a, b }) => ElementJson::Cz([*a, *b]),
                FrameElement::TwoQubit(CliffordGate::Cnot { control, target }) => {
                    ElementJson::Cnot([*control, *target])
                }
                FrameElement::TwoQubit(CliffordGate::SingleQubit { .. }) => {
                    unreachable!("frames carry only two-qubit gates")
                }
                FrameElement::Slot(q) => ElementJson::Slot(*q),
            })
            .collect(),
        slots: slots.map(|slots| {
            slots
                .iter()
                .map(|s| match s {
                    SlotGate::Clifford(idx) => SlotJson::C1(*idx),
                    SlotGate::Unitary(m) => SlotJson::U([
                        [m[0][0].re, m[0][0].im],
                        [m[0][1].re, m[0][1].im],
                        [m[1][0].re, m[1][0].im],
                        [m[1][1].re, m[1][1].im],
                    ]),
                })
                .collect()
        }),
    }
}

fn frame_from_json(json: &FrameJson) -> Result<(CircuitFrame, Option<Vec<SlotGate>>)> {
    let observable = PauliString::parse(&json.observable)?;
    let elements = json
        .elements
        .iter()
        .map(|e| match e {
            ElementJson::Cz([a, b]) => FrameElement::TwoQubit(CliffordGate::Cz { a: *a, b: *b }),
            ElementJson::Cnot([c, t]) => {
                FrameElement::TwoQubit(CliffordGate::Cnot { control: *c, target: *t })
            }
            ElementJson::Slot(q) => FrameElement::Slot(*q),
        })
        .collect();
    let frame = CircuitFrame::new(json.n, elements, observable)?;
    let slots = json
        .slots
        .as_ref()
        .map(|slots| {
            slots
                .iter()
                .map(|s| match s {
                    SlotJson::C1(idx) => SlotGate::Clifford(*idx),
                    SlotJson::U(rows) => SlotGate::Unitary([
                        [
                            Complex64::new(rows[0][0], rows[0][1]),
                            Complex64::new(rows[1][0], rows[1][1]),
                        ],
                        [
                            Complex64::new(rows[2][0], rows[2][1]),
                            Complex64::new(rows[3][0], rows[3][1]),
                        ],
                    ]),
                })
                .collect::<Vec<_>>()
        });
    Ok((frame, slots))
}

impl CircuitFrame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&frame_to_json(self, None)).expect("frame serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: FrameJson = serde_json::from_str(text)?;
        let (frame, _) = frame_from_json(&json)?;
        Ok(frame)
    }
}

impl Circuit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&frame_to_json(&self.frame, Some(&self.slots)))
            .expect("circuit serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: FrameJson = serde_json::from_str(text)?;
        let (frame, slots) = frame_from_json(&json)?;
        let slots =
            slots.ok_or_else(|| Error::Parse("circuit JSON is missing \"slots\"".into()))?;
        Circuit::new(Arc::new(frame), slots)
    }
}

use rand::SeedableRng;
