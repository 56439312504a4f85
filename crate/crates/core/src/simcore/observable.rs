use num_complex::Complex64;

use super::{qubit_mask, StateVector, MODULE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// `coeff · ⊗_q P_q`, with unlisted qubits carrying the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub coeff: f64,
    pub ops: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn identity(coeff: f64) -> Self {
        PauliString { coeff, ops: Vec::new() }
    }

    pub fn single(coeff: f64, qubit: usize, p: Pauli) -> Self {
        PauliString {
            coeff,
            ops: vec![(qubit, p)],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&(_, p)| p == Pauli::I)
    }

    /// Masks of flipped bits (X, Y), sign bits (Y, Z) and the Y count.
    pub(crate) fn masks(&self, n: usize) -> (usize, usize, u32) {
        let (mut flip, mut sign, mut ys) = (0, 0, 0);
        for &(q, p) in &self.ops {
            let m = qubit_mask(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => flip ^= m,
                Pauli::Z => sign ^= m,
                Pauli::Y => {
                    flip ^= m;
                    sign ^= m;
                    ys += 1;
                }
            }
        }
        (flip, sign, ys)
    }

    /// `⟨ψ|P|ψ⟩` without the coefficient.
    fn expectation_unit(&self, state: &StateVector) -> f64 {
        let n = state.n_qubits();
        let (flip, sign, ys) = self.masks(n);
        let amps = state.amplitudes();
        // P|i⟩ = i^{#Y} (−1)^{popcount(i & sign)} |i ^ flip⟩
        let phase = match ys % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            let s = if (i & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += amps[i ^ flip].conj() * a * s;
        }
        (acc * phase).re
    }
}

/// The Hermitian observables the simulator can measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// One real eigenvalue per computational basis state.
    Diagonal(Vec<f64>),
    /// Real linear combination of Pauli strings.
    PauliSum { n_qubits: usize, terms: Vec<PauliString> },
    /// `(I + sign·(|a⟩⟨a| − |b⟩⟨b|)) / 2` for orthonormal `a`, `b` and
    /// `sign = ±1`.
    ProjectorPair {
        one: StateVector,
        zero: StateVector,
        sign: f64,
    },
    /// `Π D Π†`: basis state `i` carries `diagonal[permutation[i]]`.
    PermutedDiagonal {
        diagonal: Vec<f64>,
        permutation: Vec<usize>,
    },
}

impl Observable {
    /// Projector onto the listed computational basis states.
    pub fn basis_projector(dim: usize, indices: &[usize]) -> Self {
        let mut d = vec![0.0; dim];
        for &i in indices {
            d[i] = 1.0;
        }
        Observable::Diagonal(d)
    }

    /// `(I + sign·(Π_1 − Π_0)) / 2`; requires orthogonal states.
    pub fn projector_pair(one: StateVector, zero: StateVector, sign: f64) -> Result<Self> {
        if one.dim() != zero.dim() {
            return Err(Error::invalid(MODULE, "projector pair dimensions differ"));
        }
        if one.inner(&zero).norm() > 1e-10 {
            return Err(Error::invalid(MODULE, "projector pair states are not orthogonal"));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::invalid(MODULE, format!("sign must be ±1, got {sign}")));
        }
        Ok(Observable::ProjectorPair { one, zero, sign })
    }

    pub fn dim(&self) -> usize {
        match self {
            Observable::Diagonal(d) => d.len(),
            Observable::PauliSum { n_qubits, .. } => 1 << n_qubits,
            Observable::ProjectorPair { one, .. } => one.dim(),
            Observable::PermutedDiagonal { diagonal, .. } => diagonal.len(),
        }
    }

    /// Diagonal entries in the computational basis, when the operator is
    /// diagonal there.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        match self {
            Observable::Diagonal(d) => Some(d.clone()),
            Observable::PermutedDiagonal { diagonal, permutation } => {
                Some(permutation.iter().map(|&j| diagonal[j]).collect())
            }
            Observable::PauliSum { n_qubits, terms } => {
                let n = *n_qubits;
                let mut d = vec![0.0; 1 << n];
                for t in terms {
                    let (flip, sign, _) = t.masks(n);
                    if flip != 0 {
                        return None;
                    }
                    for (i, v) in d.iter_mut().enumerate() {
                        *v += if (i & sign).count_ones() % 2 == 0 {
                            t.coeff
                        } else {
                            -t.coeff
                        };
                    }
                }
                Some(d)
            }
            Observable::ProjectorPair { .. } => None,
        }
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::invalid(
                MODULE,
                format!(
                    "observable of dimension {} on state of dimension {}",
                    self.dim(),
                    state.dim()
                ),
            ));
        }
        let amps = state.amplitudes();
        Ok(match self {
            Observable::Diagonal(d) => d.iter().zip(amps).map(|(v, a)| v * a.norm_sqr()).sum(),
            Observable::PermutedDiagonal { diagonal, permutation } => permutation
                .iter()
                .zip(amps)
                .map(|(&j, a)| diagonal[j] * a.norm_sqr())
                .sum(),
            Observable::PauliSum { terms, .. } => terms
                .iter()
                .map(|t| {
                    if t.is_identity() {
                        t.coeff
                    } else {
                        t.coeff * t.expectation_unit(state)
                    }
                })
                .sum(),
            Observable::ProjectorPair { one, zero, sign } => {
                let p1 = one.inner(state).norm_sqr();
                let p0 = zero.inner(state).norm_sqr();
                0.5 * (1.0 + sign * (p1 - p0))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{apply_circuit, Gate};

    #[test]
    fn eigenstate_of_projector() {
        let p = Observable::basis_projector(2, &[0]);
        assert_eq!(p.expectation(&StateVector::zero(1)).unwrap(), 1.0);
    }

    #[test]
    fn sigma_x_vanishes_on_basis_states() {
        let ox = Observable::PauliSum {
            n_qubits: 3,
            terms: vec![PauliString::identity(0.5), PauliString::single(-0.5, 1, Pauli::X)],
        };
        assert!((ox.expectation(&StateVector::zero(3)).unwrap() - 0.5).abs() < 1e-15);
        let plus = apply_circuit(&StateVector::zero(3), &[Gate::H(1)]).unwrap();
        assert!(ox.expectation(&plus).unwrap().abs() < 1e-15);
    }

    #[test]
    fn pauli_y_on_y_eigenstate() {
        // RX(−π/2)|0⟩ = (|0⟩ + i|1⟩)/√2, the +1 eigenstate of Y.
        let s = apply_circuit(&StateVector::zero(1), &[Gate::Rx(0, -std::f64::consts::FRAC_PI_2)]).unwrap();
        let y = Observable::PauliSum {
            n_qubits: 1,
            terms: vec![PauliString::single(1.0, 0, Pauli::Y)],
        };
        assert!((y.expectation(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = Observable::basis_projector(4, &[0]);
        assert!(p.expectation(&StateVector::zero(1)).is_err());
    }

    #[test]
    fn expectation_is_linear_in_pauli_terms() {
        let s = apply_circuit(
            &StateVector::zero(3),
            &[
                Gate::H(0),
                Gate::Ry(1, 0.7),
                Gate::Cnot { control: 0, target: 2 },
                Gate::Rx(2, 1.3),
            ],
        )
        .unwrap();
        let a = PauliString {
            coeff: 1.0,
            ops: vec![(0, Pauli::X), (2, Pauli::Y)],
        };
        let b = PauliString {
            coeff: 1.0,
            ops: vec![(1, Pauli::Z), (2, Pauli::Z)],
        };
        let ea = Observable::PauliSum {
            n_qubits: 3,
            terms: vec![a.clone()],
        }
        .expectation(&s)
        .unwrap();
        let eb = Observable::PauliSum {
            n_qubits: 3,
            terms: vec![b.clone()],
        }
        .expectation(&s)
        .unwrap();
        let (ca, cb) = (0.3, -1.7);
        let sum = Observable::PauliSum {
            n_qubits: 3,
            terms: vec![PauliString { coeff: ca, ..a }, PauliString { coeff: cb, ..b }],
        };
        assert!((sum.expectation(&s).unwrap() - (ca * ea + cb * eb)).abs() < 1e-10);
    }

    #[test]
    fn z_only_sums_are_diagonal() {
        let zz = Observable::PauliSum {
            n_qubits: 2,
            terms: vec![PauliString {
                coeff: 1.0,
                ops: vec![(0, Pauli::Z), (1, Pauli::Z)],
            }],
        };
        assert_eq!(zz.diagonal().unwrap(), vec![1.0, -1.0, -1.0, 1.0]);
    }
}
