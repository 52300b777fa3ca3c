//! Dense statevector simulation for small registers.
//!
//! Qubit `i` of a `k`-qubit register lives in bit `k - 1 - i` of the basis
//! index, so qubit 0 is the most significant bit: in `|10⟩` qubit 0 is set.
//! Global phase is carried along untouched.

mod dense;

pub use dense::{
    dense_unitary_of_circuit, dense_unitary_with_encoding, z_from_amplitudes, DenseUnitary,
};

use num_complex::Complex64;

use crate::error::{QtcError, Result};

pub const MAX_QUBITS: usize = 16;

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One operation of the supported gate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx {
        qubit: usize,
        theta: f64,
    },
    /// `Rz(gamma) · Ry(beta) · Rz(alpha)`.
    Rot {
        qubit: usize,
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

pub fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    [[c, ms], [ms, c]]
}

/// Closed form of `Rz(gamma) Ry(beta) Rz(alpha)`.
pub fn rot_matrix(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    let (s, c) = (beta / 2.0).sin_cos();
    let sum = (alpha + gamma) / 2.0;
    let diff = (alpha - gamma) / 2.0;
    [
        [
            Complex64::from_polar(c, -sum),
            -Complex64::from_polar(s, diff),
        ],
        [
            Complex64::from_polar(s, -diff),
            Complex64::from_polar(c, sum),
        ],
    ]
}

fn check_qubit_count(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(QtcError::config("qubit count must be at least 1"));
    }
    if num_qubits > MAX_QUBITS {
        return Err(QtcError::config(format!(
            "qubit count exceeds {MAX_QUBITS} (got {num_qubits})"
        )));
    }
    Ok(())
}

/// The `2^k` amplitudes of a `k`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0…0⟩` on `num_qubits` qubits.
pub fn zero_state(num_qubits: usize) -> Result<StateVector> {
    StateVector::zero(num_qubits)
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps caller-provided amplitudes. The vector must have length
    /// `2^num_qubits` and unit norm within `1e-9`.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(QtcError::shape(
                "state amplitudes",
                1 << num_qubits,
                amplitudes.len(),
            ));
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(QtcError::Argument(format!(
                "state is not normalized (|psi|^2 = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit_mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.num_qubits {
            return Err(QtcError::QubitIndex {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    /// Applies an arbitrary 2×2 matrix to one qubit.
    pub fn apply_single(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        let mask = self.bit_mask(qubit)?;
        let dim = self.amplitudes.len();
        for block in (0..dim).step_by(mask << 1) {
            for i in block..block + mask {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.apply_single(qubit, &rx_matrix(theta))
    }

    pub fn apply_rot(&mut self, qubit: usize, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
        self.apply_single(qubit, &rot_matrix(alpha, beta, gamma))
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let cmask = self.bit_mask(control)?;
        let tmask = self.bit_mask(target)?;
        if control == target {
            return Err(QtcError::InvalidGate(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        for i in 0..self.amplitudes.len() {
            // visit each swapped pair once, from its target-bit-clear member
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Rx { qubit, theta } => self.apply_rx(qubit, theta),
            Gate::Rot {
                qubit,
                alpha,
                beta,
                gamma,
            } => self.apply_rot(qubit, alpha, beta, gamma),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// `⟨Z_i⟩` for every qubit `i`, in qubit order.
    pub fn z_expectations(&self) -> Vec<f64> {
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() < 1e-9,
            "z_expectations on an unnormalized state"
        );
        let n = self.num_qubits;
        let mut out = vec![0.0; n];
        for (x, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            for (q, e) in out.iter_mut().enumerate() {
                if x >> (n - 1 - q) & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(state: &StateVector, expected: &[Complex64], tol: f64) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - e).norm() <= tol, "{a} != {e}");
        }
    }

    fn basis(num_qubits: usize, index: usize) -> StateVector {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        StateVector::from_amplitudes(num_qubits, amps).unwrap()
    }

    #[test]
    fn zero_state_shapes() {
        assert_amps(&zero_state(1).unwrap(), &[ONE, ZERO], 0.0);
        assert_amps(&zero_state(2).unwrap(), &[ONE, ZERO, ZERO, ZERO], 0.0);
        assert_eq!(zero_state(16).unwrap().amplitudes().len(), 65536);
    }

    #[test]
    fn zero_state_rejects_out_of_range() {
        let err = zero_state(17).unwrap_err();
        assert!(err.to_string().contains("qubit count exceeds 16"), "{err}");
        assert!(zero_state(0).is_err());
    }

    #[test]
    fn rx_examples() {
        let mut s = zero_state(1).unwrap();
        s.apply_rx(0, 0.0).unwrap();
        assert_amps(&s, &[ONE, ZERO], 1e-12);

        let mut s = zero_state(1).unwrap();
        s.apply_rx(0, PI).unwrap();
        assert_amps(&s, &[ZERO, c(0.0, -1.0)], 1e-12);
        assert!((s.z_expectations()[0] + 1.0).abs() < 1e-12);

        let mut s = zero_state(1).unwrap();
        s.apply_rx(0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)], 1e-12);
        assert!(s.z_expectations()[0].abs() < 1e-12);
    }

    #[test]
    fn rot_examples() {
        let mut s = zero_state(2).unwrap();
        s.apply_rx(1, 0.7).unwrap();
        let before = s.clone();
        s.apply_rot(1, 0.0, 0.0, 0.0).unwrap();
        assert_amps(&s, before.amplitudes(), 1e-12);

        let mut s = zero_state(1).unwrap();
        s.apply_rot(0, 0.0, PI, 0.0).unwrap();
        assert_amps(&s, &[ZERO, ONE], 1e-12);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ is index 2 under the qubit-0-is-MSB convention
        let mut s = basis(2, 0b10);
        s.apply_cnot(0, 1).unwrap();
        assert_amps(&s, basis(2, 0b11).amplitudes(), 0.0);

        let mut s = basis(2, 0b00);
        s.apply_cnot(0, 1).unwrap();
        assert_amps(&s, basis(2, 0b00).amplitudes(), 0.0);

        let h = c(FRAC_1_SQRT_2, 0.0);
        let mut s = StateVector::from_amplitudes(2, vec![h, ZERO, h, ZERO]).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_amps(&s, &[h, ZERO, ZERO, h], 1e-15);
    }

    #[test]
    fn gate_errors() {
        let mut s = zero_state(2).unwrap();
        assert!(matches!(
            s.apply_rx(2, 0.1),
            Err(QtcError::QubitIndex { index: 2, .. })
        ));
        assert!(matches!(s.apply_cnot(1, 1), Err(QtcError::InvalidGate(_))));
        assert!(matches!(
            s.apply_cnot(0, 5),
            Err(QtcError::QubitIndex { .. })
        ));
    }

    #[test]
    fn z_expectation_examples() {
        assert_eq!(basis(1, 0).z_expectations(), vec![1.0]);
        assert_eq!(basis(1, 1).z_expectations(), vec![-1.0]);
        let h = c(FRAC_1_SQRT_2, 0.0);
        let plus = StateVector::from_amplitudes(1, vec![h, h]).unwrap();
        assert!(plus.z_expectations()[0].abs() < 1e-12);
        // |01⟩: qubit 0 clear, qubit 1 set
        assert_eq!(basis(2, 0b01).z_expectations(), vec![1.0, -1.0]);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(1, vec![ONE]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![ONE, ONE]).is_err());
    }

    fn unitarity_error(m: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let acc: Complex64 = m.iter().map(|row| row[i].conj() * row[j]).sum();
                let id = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - id).norm());
            }
        }
        worst
    }

    #[test]
    fn rx_composes_additively() {
        let mut a = zero_state(3).unwrap();
        a.apply_rot(1, 0.3, 1.1, 2.0).unwrap();
        let mut b = a.clone();
        a.apply_rx(1, 0.4).unwrap();
        a.apply_rx(1, 1.9).unwrap();
        b.apply_rx(1, 2.3).unwrap();
        assert_amps(&a, b.amplitudes(), 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn generated_gates_are_unitary(t in -10.0f64..10.0, a in -10.0f64..10.0, b in -10.0f64..10.0, g in -10.0f64..10.0) {
                prop_assert!(unitarity_error(&rx_matrix(t)) < 1e-12);
                prop_assert!(unitarity_error(&rot_matrix(a, b, g)) < 1e-12);
            }

            #[test]
            fn rx_sum_law(a in -7.0f64..7.0, b in -7.0f64..7.0, q in 0usize..3) {
                let mut s1 = zero_state(3).unwrap();
                s1.apply_rot(0, 0.2, 0.9, 1.4).unwrap();
                s1.apply_cnot(0, 2).unwrap();
                let mut s2 = s1.clone();
                s1.apply_rx(q, a).unwrap();
                s1.apply_rx(q, b).unwrap();
                s2.apply_rx(q, a + b).unwrap();
                for (x, y) in s1.amplitudes().iter().zip(s2.amplitudes()) {
                    prop_assert!((x - y).norm() < 1e-10);
                }
            }
        }
    }
}
