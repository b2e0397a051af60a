//! Heisenberg-picture evaluation of Clifford circuits: effective observable,
//! ideal expectation, circuit weight, Pauli error propagation and the exact
//! expectation under product-form Pauli noise.
//!
//! Everything here is a single O(nN) backward sweep: conjugating the
//! observable through the circuit also yields, at every element, the local
//! restriction needed to decide whether an error channel inserted there
//! flips the measured sign.

use crate::circuit::{Circuit, Op, SlotGate};
use crate::pauli::{conjugate, CliffordGate, PauliString};
use crate::{Error, Result};

/// Restriction of the backward-propagated observable at one element, used to
/// test commutation with error channels inserted after that element.
#[derive(Clone, Copy, Debug)]
pub enum GateObs {
    TwoQubit {
        element: usize,
        qubits: (usize, usize),
        /// 4-bit local Pauli code `x_a | z_a<<1 | x_b<<2 | z_b<<3`.
        code: u8,
    },
    Slot {
        element: usize,
        slot: usize,
        qubit: usize,
        /// 2-bit local Pauli code `x | z<<1`.
        code: u8,
    },
}

/// Result of the backward sweep over a Clifford circuit.
#[derive(Clone, Debug)]
pub struct CircuitAnalysis {
    /// The signed effective observable `U† Q U`.
    pub effective_observable: PauliString,
    /// `<0|U† Q U|0>`, one of -1, 0, +1.
    pub ideal_expectation: i8,
    /// Number of non-identity factors of the effective observable.
    pub weight: usize,
    /// Per-element local observable restrictions, in element order.
    pub gate_observables: Vec<GateObs>,
}

fn slot_clifford_gate(gate: &SlotGate, qubit: usize, element: usize) -> Result<CliffordGate> {
    match gate {
        SlotGate::Clifford(idx) => Ok(CliffordGate::SingleQubit { index: *idx, qubit }),
        SlotGate::Unitary(_) => Err(Error::NonClifford(format!(
            "slot at element {element} holds a general unitary"
        ))),
    }
}

/// Backward sweep computing the effective observable and the per-element
/// local observable restrictions. Requires a fully Clifford circuit.
pub fn analyze(circuit: &Circuit) -> Result<CircuitAnalysis> {
    let mut back = circuit.observable().clone();
    let count = circuit.element_count();
    let mut gate_observables: Vec<GateObs> = Vec::with_capacity(count);
    let mut slot_cursor = circuit.frame().slot_count();
    for element in (0..count).rev() {
        // `back` currently equals the observable conjugated through all
        // elements after `element`; record its restriction before updating.
        let gate = match circuit.op(element) {
            Op::TwoQubit(g) => {
                let (a, b) = g.qubits();
                let b = b.expect("frame gates are two-qubit");
                gate_observables.push(GateObs::TwoQubit {
                    element,
                    qubits: (a, b),
                    code: back.local_code2(a, b),
                });
                g
            }
            Op::Slot { qubit, gate } => {
                slot_cursor -= 1;
                gate_observables.push(GateObs::Slot {
                    element,
                    slot: slot_cursor,
                    qubit,
                    code: back.local_code1(qubit),
                });
                slot_clifford_gate(gate, qubit, element)?
            }
        };
        back = conjugate(&gate.inverse(), &back)?;
    }
    gate_observables.reverse();
    let ideal_expectation = if back.x_bits() != 0 { 0 } else { back.sign()? };
    Ok(CircuitAnalysis {
        weight: back.weight(),
        ideal_expectation,
        effective_observable: back,
        gate_observables,
    })
}

/// The signed effective observable `U† Q U`.
pub fn effective_observable(circuit: &Circuit) -> Result<PauliString> {
    Ok(analyze(circuit)?.effective_observable)
}

/// Ideal expectation `<0…0|U† Q U|0…0>`: 0 if any factor of the effective
/// observable is X or Y, otherwise its sign.
pub fn ideal_expectation(circuit: &Circuit) -> Result<i8> {
    Ok(analyze(circuit)?.ideal_expectation)
}

/// Number of non-identity factors of the effective observable.
pub fn circuit_weight(circuit: &Circuit) -> Result<usize> {
    Ok(analyze(circuit)?.weight)
}

/// Conjugates `sigma` forward through the elements after position
/// `position` (an error occurring after the first `position` elements ends
/// up as the returned Pauli at the end of the circuit). `position` may equal
/// the element count, in which case `sigma` is returned unchanged.
pub fn propagate_error(circuit: &Circuit, position: usize, sigma: &PauliString) -> Result<PauliString> {
    let count = circuit.element_count();
    if position > count {
        return Err(Error::OutOfRange(format!(
            "position {position} beyond {count} elements"
        )));
    }
    if sigma.n() != circuit.n() {
        return Err(Error::DimensionMismatch(format!(
            "error on {} qubits in a {}-qubit circuit",
            sigma.n(),
            circuit.n()
        )));
    }
    let mut out = sigma.clone();
    for element in position..count {
        let gate = match circuit.op(element) {
            Op::TwoQubit(g) => g,
            Op::Slot { qubit, gate } => slot_clifford_gate(gate, qubit, element)?,
        };
        out = conjugate(&gate, &out)?;
    }
    Ok(out)
}

/// A binary Pauli error channel `(1-p)[I] + p[sigma]` inserted after a gate,
/// together with its propagated form at the end of the circuit.
#[derive(Clone, Debug)]
pub struct PropagatedChannel {
    /// Element index after which the error occurs.
    pub origin: usize,
    /// The error as inserted, supported on the gate's qubits.
    pub local_pauli: PauliString,
    /// The error conjugated through all later elements.
    pub propagated: PauliString,
    /// Error probability, in [0, 1/2).
    pub probability: f64,
}

impl PropagatedChannel {
    pub fn new(
        circuit: &Circuit,
        origin: usize,
        local_pauli: PauliString,
        probability: f64,
    ) -> Result<Self> {
        if !(0.0..0.5).contains(&probability) {
            return Err(Error::InvalidParameter(format!(
                "channel probability {probability} outside [0, 1/2)"
            )));
        }
        let propagated = propagate_error(circuit, origin + 1, &local_pauli)?;
        Ok(Self { origin, local_pauli, propagated, probability })
    }
}

/// Exact expectation under a product of binary Pauli channels:
/// `y = f · Π_k (1-2 p_k)^{t_k}` where `t_k = 1` iff the propagated error
/// anticommutes with the observable. Probabilities are accumulated in log
/// form, so products over tens of thousands of channels stay accurate.
pub fn pauli_noise_expectation(circuit: &Circuit, channels: &[PropagatedChannel]) -> Result<f64> {
    let f = ideal_expectation(circuit)?;
    if f == 0 {
        return Ok(0.0);
    }
    let observable = circuit.observable();
    let mut log_sum = 0.0f64;
    for channel in channels {
        if !(0.0..0.5).contains(&channel.probability) {
            return Err(Error::InvalidParameter(format!(
                "channel probability {} outside [0, 1/2)",
                channel.probability
            )));
        }
        if channel.propagated.anticommutes(observable) {
            log_sum += (-2.0 * channel.probability).ln_1p();
        }
    }
    Ok(f64::from(f) * log_sum.exp())
}

/// Parity of the symplectic product of two 4-bit local codes
/// (true = anticommute).
pub fn codes2_anticommute(a: u8, b: u8) -> bool {
    let xa1 = a & 1;
    let za1 = (a >> 1) & 1;
    let xa2 = (a >> 2) & 1;
    let za2 = (a >> 3) & 1;
    let xb1 = b & 1;
    let zb1 = (b >> 1) & 1;
    let xb2 = (b >> 2) & 1;
    let zb2 = (b >> 3) & 1;
    ((xa1 & zb1) ^ (za1 & xb1) ^ (xa2 & zb2) ^ (za2 & xb2)) == 1
}

/// Parity of the symplectic product of two 2-bit local codes.
pub fn codes1_anticommute(a: u8, b: u8) -> bool {
    let xa = a & 1;
    let za = (a >> 1) & 1;
    let xb = b & 1;
    let zb = (b >> 1) & 1;
    ((xa & zb) ^ (za & xb)) == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_frame, CircuitFrame, FamilyKind, FrameElement, FrameFamily};
    use crate::pauli::{Pauli, C1_SIZE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    fn slot_only_frame(n: usize, observable: &str) -> Arc<CircuitFrame> {
        let elements = (0..n).map(FrameElement::Slot).collect();
        Arc::new(
            CircuitFrame::new(n, elements, PauliString::parse(observable).unwrap()).unwrap(),
        )
    }

    fn single_slot_circuit(observable: &str, index: u8) -> Circuit {
        let frame = slot_only_frame(1, observable);
        Circuit::new(frame, vec![SlotGate::Clifford(index)]).unwrap()
    }

    #[test]
    fn identity_circuit_keeps_observable() {
        let frame = slot_only_frame(2, "ZI");
        let circuit =
            Circuit::new(frame, vec![SlotGate::Clifford(0), SlotGate::Clifford(0)]).unwrap();
        let obs = effective_observable(&circuit).unwrap();
        assert_eq!(obs, PauliString::parse("ZI").unwrap());
        assert_eq!(ideal_expectation(&circuit).unwrap(), 1);
        assert_eq!(circuit_weight(&circuit).unwrap(), 1);
    }

    #[test]
    fn hadamard_turns_z_into_x() {
        // Index 1 is H by the canonical order.
        let circuit = single_slot_circuit("Z", 1);
        assert_eq!(
            effective_observable(&circuit).unwrap(),
            PauliString::parse("X").unwrap()
        );
        assert_eq!(ideal_expectation(&circuit).unwrap(), 0);
    }

    #[test]
    fn x_gate_flips_z_expectation() {
        let idx = crate::pauli::c1_index_by_action((Pauli::X, false), (Pauli::Z, true))
            .expect("the X gate is a single-qubit Clifford");
        let circuit = single_slot_circuit("Z", idx);
        assert_eq!(ideal_expectation(&circuit).unwrap(), -1);
    }

    #[test]
    fn propagate_through_cnot() {
        let frame = Arc::new(
            CircuitFrame::new(
                2,
                vec![
                    FrameElement::Slot(0),
                    FrameElement::Slot(1),
                    FrameElement::TwoQubit(CliffordGate::Cnot { control: 0, target: 1 }),
                ],
                PauliString::parse("ZI").unwrap(),
            )
            .unwrap(),
        );
        let circuit =
            Circuit::new(frame, vec![SlotGate::Clifford(0), SlotGate::Clifford(0)]).unwrap();
        let sigma = PauliString::parse("XI").unwrap();
        // Inserted before the CNOT (after the slot layer).
        let out = propagate_error(&circuit, 2, &sigma).unwrap();
        assert_eq!(out, PauliString::parse("XX").unwrap());
        // position = element count leaves the error unchanged.
        let out = propagate_error(&circuit, 3, &sigma).unwrap();
        assert_eq!(out, sigma);
    }

    #[test]
    fn cz_commutes_with_zi() {
        let frame = Arc::new(
            CircuitFrame::new(
                2,
                vec![
                    FrameElement::Slot(0),
                    FrameElement::Slot(1),
                    FrameElement::TwoQubit(CliffordGate::Cz { a: 0, b: 1 }),
                ],
                PauliString::parse("ZI").unwrap(),
            )
            .unwrap(),
        );
        let circuit =
            Circuit::new(frame, vec![SlotGate::Clifford(0), SlotGate::Clifford(0)]).unwrap();
        assert_eq!(circuit_weight(&circuit).unwrap(), 1);
    }

    #[test]
    fn noise_expectation_single_cnot_depolarising() {
        // One CNOT with the 15-channel product form at p = eps/15 and Q = ZI:
        // exactly 8 channels anticommute, so y = (1-2 eps/15)^8.
        let frame = Arc::new(
            CircuitFrame::new(
                2,
                vec![
                    FrameElement::Slot(0),
                    FrameElement::Slot(1),
                    FrameElement::TwoQubit(CliffordGate::Cnot { control: 0, target: 1 }),
                ],
                PauliString::parse("ZI").unwrap(),
            )
            .unwrap(),
        );
        let circuit =
            Circuit::new(frame, vec![SlotGate::Clifford(0), SlotGate::Clifford(0)]).unwrap();
        assert_eq!(ideal_expectation(&circuit).unwrap(), 1);

        let eps = 3e-3;
        let p = eps / 15.0;
        let mut channels = Vec::new();
        let mut anticommuting = 0;
        for code in 1u8..16 {
            let fa = Pauli::from_bits(code & 1 == 1, code & 2 == 2);
            let fb = Pauli::from_bits(code & 4 == 4, code & 8 == 8);
            let sigma = PauliString::embed(2, &[0, 1], &[fa, fb], false).unwrap();
            let channel = PropagatedChannel::new(&circuit, 2, sigma, p).unwrap();
            if channel.propagated.anticommutes(circuit.observable()) {
                anticommuting += 1;
            }
            channels.push(channel);
        }
        assert_eq!(anticommuting, 8);
        let y = pauli_noise_expectation(&circuit, &channels).unwrap();
        let expected = (1.0 - 2.0 * p).powi(8);
        assert!((y - expected).abs() < 1e-14);
        // Summation-form value agrees to O(eps^2).
        assert!((y - (1.0 - 16.0 * eps / 15.0)).abs() < 20.0 * eps * eps);
    }

    #[test]
    fn zero_ideal_expectation_kills_noise_response() {
        // H then measure Z: f = 0, so y = 0 for any channel set.
        let circuit = single_slot_circuit("Z", 1);
        let sigma = PauliString::parse("X").unwrap();
        let channel = PropagatedChannel::new(&circuit, 0, sigma, 0.1).unwrap();
        assert_eq!(pauli_noise_expectation(&circuit, &[channel]).unwrap(), 0.0);
    }

    #[test]
    fn probability_out_of_range_is_rejected() {
        let circuit = single_slot_circuit("Z", 0);
        let sigma = PauliString::parse("X").unwrap();
        assert!(PropagatedChannel::new(&circuit, 1, sigma, 0.5).is_err());
    }

    #[test]
    fn analysis_matches_naive_forward_build() {
        // Effective observable via backward sweep equals conjugating the
        // observable by each gate's inverse in reverse order, built naively.
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for trial in 0..20 {
            let family = FrameFamily::new(FamilyKind::AllToAll, 4, 12, 100 + trial);
            let frame = Arc::new(build_frame(&family).unwrap());
            let slots = (0..frame.slot_count())
                .map(|_| SlotGate::Clifford(rng.random_range(0..C1_SIZE as u8)))
                .collect();
            let circuit = Circuit::new(frame, slots).unwrap();
            let analysis = analyze(&circuit).unwrap();

            let mut obs = circuit.observable().clone();
            let gates: Vec<CliffordGate> = circuit
                .ops()
                .enumerate()
                .map(|(i, op)| match op {
                    Op::TwoQubit(g) => g,
                    Op::Slot { qubit, gate } => slot_clifford_gate(gate, qubit, i).unwrap(),
                })
                .collect();
            for gate in gates.iter().rev() {
                obs = conjugate(&gate.inverse(), &obs).unwrap();
            }
            assert_eq!(analysis.effective_observable, obs);
            assert_eq!(analysis.weight, obs.weight());
        }
    }
}
