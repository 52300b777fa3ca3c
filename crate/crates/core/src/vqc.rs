//! The frozen strongly-entangling circuit used by each QTC filter.
//!
//! Per input window the circuit angle-encodes `k` scalars with `Rx`, then
//! for each layer applies a `Rot(α, β, γ)` on every qubit followed by the
//! CNOT ring `0→1, 1→2, …, k−2→k−1, k−1→0`, and reads out `⟨Z⟩` on every
//! wire. Rotation angles are drawn once from a seed and never change.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::qsim::{Gate, StateVector, MAX_QUBITS};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RotationTriple {
    pub const ZERO: Self = Self {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    fn is_valid(&self) -> bool {
        [self.alpha, self.beta, self.gamma]
            .iter()
            .all(|a| (0.0..TAU).contains(a))
    }
}

/// A frozen circuit: qubit count, layer count and the rotations of every
/// layer. Serializes as `{k, depth, seed}`; deserializing regenerates the
/// rotations from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CircuitSummary", try_from = "CircuitSummary")]
pub struct CircuitSpec {
    num_qubits: usize,
    depth: usize,
    rotations: Vec<RotationTriple>,
    seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CircuitSummary {
    k: usize,
    depth: usize,
    seed: u64,
}

impl From<CircuitSpec> for CircuitSummary {
    fn from(c: CircuitSpec) -> Self {
        Self {
            k: c.num_qubits,
            depth: c.depth,
            seed: c.seed,
        }
    }
}

impl TryFrom<CircuitSummary> for CircuitSpec {
    type Error = QtcError;

    fn try_from(s: CircuitSummary) -> Result<Self> {
        CircuitSpec::random(s.k, s.depth, s.seed)
    }
}

fn check_shape(num_qubits: usize, depth: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(QtcError::config(format!(
            "circuit qubit count must be in 1..={MAX_QUBITS} (got {num_qubits})"
        )));
    }
    if depth == 0 {
        return Err(QtcError::config("circuit depth must be at least 1"));
    }
    Ok(())
}

/// Draws a circuit with every angle i.i.d. uniform on `[0, 2π)`.
pub fn init_circuit(num_qubits: usize, depth: usize, seed: u64) -> Result<CircuitSpec> {
    CircuitSpec::random(num_qubits, depth, seed)
}

/// Runs `circuit` on one window of encoding angles.
pub fn run_circuit(circuit: &CircuitSpec, angles: &[f64]) -> Result<Vec<f64>> {
    circuit.run(angles)
}

impl CircuitSpec {
    pub fn random(num_qubits: usize, depth: usize, seed: u64) -> Result<Self> {
        check_shape(num_qubits, depth)?;
        let mut stream = SeedStream::new(seed);
        let rotations = (0..num_qubits * depth)
            .map(|_| RotationTriple {
                alpha: stream.angle(),
                beta: stream.angle(),
                gamma: stream.angle(),
            })
            .collect();
        Ok(Self {
            num_qubits,
            depth,
            rotations,
            seed,
        })
    }

    /// Builds a circuit from explicit rotations, laid out layer-major.
    /// The seed is recorded as given and is not used to regenerate anything.
    pub fn from_rotations(
        num_qubits: usize,
        depth: usize,
        rotations: Vec<RotationTriple>,
        seed: u64,
    ) -> Result<Self> {
        check_shape(num_qubits, depth)?;
        if rotations.len() != num_qubits * depth {
            return Err(QtcError::shape(
                "circuit rotations",
                num_qubits * depth,
                rotations.len(),
            ));
        }
        if let Some(bad) = rotations.iter().find(|r| !r.is_valid()) {
            return Err(QtcError::config(format!(
                "rotation angles must lie in [0, 2pi): {bad:?}"
            )));
        }
        Ok(Self {
            num_qubits,
            depth,
            rotations,
            seed,
        })
    }

    /// All rotation angles zero.
    pub fn zeroed(num_qubits: usize, depth: usize) -> Result<Self> {
        Self::from_rotations(
            num_qubits,
            depth,
            vec![RotationTriple::ZERO; num_qubits * depth],
            0,
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rotations(&self) -> &[RotationTriple] {
        &self.rotations
    }

    fn ring(&self) -> impl Iterator<Item = (usize, usize)> {
        let k = self.num_qubits;
        // no entangler on a single wire
        let len = if k > 1 { k } else { 0 };
        (0..len).map(move |i| (i, (i + 1) % k))
    }

    /// The layers as a gate list, encoding excluded.
    pub fn gates(&self) -> Vec<Gate> {
        let mut gates = Vec::with_capacity(self.depth * self.num_qubits * 2);
        for layer in self.rotations.chunks(self.num_qubits) {
            for (qubit, r) in layer.iter().enumerate() {
                gates.push(Gate::Rot {
                    qubit,
                    alpha: r.alpha,
                    beta: r.beta,
                    gamma: r.gamma,
                });
            }
            gates.extend(
                self.ring()
                    .map(|(control, target)| Gate::Cnot { control, target }),
            );
        }
        gates
    }

    pub fn encoding_gates(angles: &[f64]) -> Vec<Gate> {
        angles
            .iter()
            .enumerate()
            .map(|(qubit, &theta)| Gate::Rx { qubit, theta })
            .collect()
    }

    pub fn run(&self, angles: &[f64]) -> Result<Vec<f64>> {
        Ok(self.final_state(angles)?.z_expectations())
    }

    /// State after encoding and all layers, before readout.
    pub fn final_state(&self, angles: &[f64]) -> Result<StateVector> {
        if angles.len() != self.num_qubits {
            return Err(QtcError::shape(
                "circuit input angles",
                self.num_qubits,
                angles.len(),
            ));
        }
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(QtcError::Argument(format!(
                "circuit input angle is not finite: {bad}"
            )));
        }
        let mut state = StateVector::zero(self.num_qubits)?;
        for (qubit, &theta) in angles.iter().enumerate() {
            state.apply_rx(qubit, theta)?;
        }
        for layer in self.rotations.chunks(self.num_qubits) {
            for (qubit, r) in layer.iter().enumerate() {
                state.apply_rot(qubit, r.alpha, r.beta, r.gamma)?;
            }
            for (control, target) in self.ring() {
                state.apply_cnot(control, target)?;
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{dense_unitary_with_encoding, zero_state};
    use std::f64::consts::PI;

    #[test]
    fn init_is_deterministic() {
        let a = init_circuit(4, 1, 42).unwrap();
        let b = init_circuit(4, 1, 42).unwrap();
        assert_eq!(a, b);
        let c = init_circuit(4, 1, 43).unwrap();
        assert_ne!(a.rotations(), c.rotations());
    }

    #[test]
    fn init_rejects_bad_shapes() {
        assert!(matches!(init_circuit(0, 1, 7), Err(QtcError::Config(_))));
        assert!(matches!(init_circuit(17, 1, 7), Err(QtcError::Config(_))));
        assert!(matches!(init_circuit(4, 0, 7), Err(QtcError::Config(_))));
    }

    #[test]
    fn random_rotations_in_range() {
        let c = init_circuit(16, 3, 5).unwrap();
        assert_eq!(c.rotations().len(), 48);
        assert!(c.rotations().iter().all(RotationTriple::is_valid));
    }

    #[test]
    fn zero_circuit_on_zero_input() {
        let c = CircuitSpec::zeroed(4, 1).unwrap();
        assert_eq!(c.run(&[0.0; 4]).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn ring_hand_trace() {
        // |1000⟩ → 0→1: |1100⟩ → 1→2: |1110⟩ → 2→3: |1111⟩ → 3→0: |0111⟩
        let c = CircuitSpec::zeroed(4, 1).unwrap();
        let out = c.run(&[PI, 0.0, 0.0, 0.0]).unwrap();
        let expect = [1.0, -1.0, -1.0, -1.0];
        for (o, e) in out.iter().zip(expect) {
            assert!((o - e).abs() < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn single_qubit_circuit_has_no_ring() {
        let c = CircuitSpec::zeroed(1, 2).unwrap();
        assert!(c.gates().iter().all(|g| !matches!(g, Gate::Cnot { .. })));
        let out = c.run(&[PI]).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_rejects_wrong_arity() {
        let c = init_circuit(3, 1, 1).unwrap();
        assert!(matches!(c.run(&[0.0; 2]), Err(QtcError::Shape { .. })));
        assert!(c.run(&[0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn serializes_as_seed_summary() {
        let c = init_circuit(4, 2, 99).unwrap();
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json, serde_json::json!({"k": 4, "depth": 2, "seed": 99}));
        let back: CircuitSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn matches_dense_oracle_for_two_layers() {
        let c = init_circuit(3, 2, 17).unwrap();
        let angles = [0.3, -1.2, 2.5];
        let sim = c.final_state(&angles).unwrap();
        let oracle = dense_unitary_with_encoding(&c, &angles)
            .unwrap()
            .apply(&zero_state(3).unwrap())
            .unwrap();
        for (a, b) in sim.amplitudes().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn outputs_are_continuous_in_angles() {
        let c = init_circuit(4, 1, 8).unwrap();
        let base = [0.4, 1.0, -2.0, 2.9];
        let y0 = c.run(&base).unwrap();
        for i in 0..4 {
            let mut p = base;
            p[i] += 1e-7;
            let y1 = c.run(&p).unwrap();
            for (a, b) in y0.iter().zip(&y1) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}
