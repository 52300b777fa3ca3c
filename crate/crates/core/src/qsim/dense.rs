//! Brute-force dense-unitary oracle.
//!
//! Builds the full `2^k × 2^k` matrix of a gate sequence by Kronecker
//! lifting and explicit matrix products. It shares no amplitude kernels with
//! [`StateVector`]: `Rot` is assembled here as the literal product
//! `Rz(γ)·Ry(β)·Rz(α)` and CNOT as a permutation matrix. Only meant for
//! verifying the simulator on registers of at most four qubits.

use num_complex::Complex64;

use super::{Gate, StateVector};
use crate::error::{QtcError, Result};
use crate::vqc::CircuitSpec;

pub const ORACLE_MAX_QUBITS: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    num_qubits: usize,
    dim: usize,
    /// Row-major `dim × dim`.
    entries: Vec<Complex64>,
}

fn small(rows: [[Complex64; 2]; 2]) -> DenseUnitary {
    DenseUnitary {
        num_qubits: 1,
        dim: 2,
        entries: vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]],
    }
}

fn rz(theta: f64) -> DenseUnitary {
    small([
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ])
}

fn ry(theta: f64) -> DenseUnitary {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new((theta / 2.0).sin(), 0.0);
    small([[c, -s], [s, c]])
}

fn rx(theta: f64) -> DenseUnitary {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    small([[c, s], [s, c]])
}

impl DenseUnitary {
    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self {
            num_qubits,
            dim,
            entries,
        }
    }

    /// Ordered product of `gates` (first gate applied first).
    pub fn from_gates(num_qubits: usize, gates: &[Gate]) -> Result<Self> {
        if num_qubits == 0 || num_qubits > ORACLE_MAX_QUBITS {
            return Err(QtcError::config(format!(
                "dense oracle supports 1 to {ORACLE_MAX_QUBITS} qubits (got {num_qubits})"
            )));
        }
        let mut u = Self::identity(num_qubits);
        for gate in gates {
            let g = Self::lift(num_qubits, gate)?;
            u = g.matmul(&u);
        }
        Ok(u)
    }

    fn lift(num_qubits: usize, gate: &Gate) -> Result<Self> {
        let check = |q: usize| {
            if q >= num_qubits {
                Err(QtcError::QubitIndex {
                    index: q,
                    num_qubits,
                })
            } else {
                Ok(())
            }
        };
        let (qubit, local) = match *gate {
            Gate::Rx { qubit, theta } => (qubit, rx(theta)),
            Gate::Rot {
                qubit,
                alpha,
                beta,
                gamma,
            } => (qubit, rz(gamma).matmul(&ry(beta)).matmul(&rz(alpha))),
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(QtcError::InvalidGate(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
                return Ok(Self::cnot(num_qubits, control, target));
            }
        };
        check(qubit)?;
        // qubit 0 is the leftmost (most significant) Kronecker factor
        let mut out = if qubit == 0 {
            local.clone()
        } else {
            Self::identity(1)
        };
        for q in 1..num_qubits {
            let factor = if q == qubit {
                local.clone()
            } else {
                Self::identity(1)
            };
            out = out.kron(&factor);
        }
        Ok(out)
    }

    fn cnot(num_qubits: usize, control: usize, target: usize) -> Self {
        let dim = 1 << num_qubits;
        let bit = |x: usize, q: usize| (x >> (num_qubits - 1 - q)) & 1;
        let mut entries = vec![ZERO; dim * dim];
        for x in 0..dim {
            let y = if bit(x, control) == 1 {
                x ^ (1 << (num_qubits - 1 - target))
            } else {
                x
            };
            entries[y * dim + x] = ONE;
        }
        Self {
            num_qubits,
            dim,
            entries,
        }
    }

    fn kron(&self, rhs: &Self) -> Self {
        let dim = self.dim * rhs.dim;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.entries[i * self.dim + j];
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        let row = i * rhs.dim + k;
                        let col = j * rhs.dim + l;
                        entries[row * dim + col] = a * rhs.entries[k * rhs.dim + l];
                    }
                }
            }
        }
        Self {
            num_qubits: self.num_qubits + rhs.num_qubits,
            dim,
            entries,
        }
    }

    fn matmul(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                for j in 0..n {
                    entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        Self {
            num_qubits: self.num_qubits,
            dim: n,
            entries,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    /// Matrix–vector product, returned as raw amplitudes.
    pub fn apply(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        let amps = state.amplitudes();
        if amps.len() != self.dim {
            return Err(QtcError::shape("dense unitary input", self.dim, amps.len()));
        }
        Ok((0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.entries[i * self.dim + j] * amps[j])
                    .sum()
            })
            .collect())
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.entries[k * n + i].conj() * self.entries[k * n + j];
                }
                let id = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - id).norm());
            }
        }
        worst
    }
}

/// Unitary of the circuit's trainable-shaped part (rotations and CNOT
/// rings), excluding the input encoding.
pub fn dense_unitary_of_circuit(circuit: &CircuitSpec) -> Result<DenseUnitary> {
    DenseUnitary::from_gates(circuit.num_qubits(), &circuit.gates())
}

/// Unitary of the whole circuit for one input: `Rx` encoding followed by
/// the variational layers.
pub fn dense_unitary_with_encoding(circuit: &CircuitSpec, angles: &[f64]) -> Result<DenseUnitary> {
    let mut gates = CircuitSpec::encoding_gates(angles);
    gates.extend(circuit.gates());
    DenseUnitary::from_gates(circuit.num_qubits(), &gates)
}

/// Pauli-Z expectations of raw amplitudes, computed independently of
/// [`StateVector::z_expectations`].
pub fn z_from_amplitudes(num_qubits: usize, amps: &[Complex64]) -> Vec<f64> {
    (0..num_qubits)
        .map(|q| {
            amps.iter()
                .enumerate()
                .map(|(x, a)| {
                    let sign = if x & (1 << (num_qubits - 1 - q)) == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * a.norm_sqr()
                })
                .sum()
        })
        .collect()
}
