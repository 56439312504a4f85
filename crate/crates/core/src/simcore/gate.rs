use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{qubit_mask, StateVector, MODULE};
use crate::{Error, Result};

/// The fixed gate set of the simulator.
///
/// Rotations follow `R_P(θ) = exp(−iθP/2)`, so every parameterized gate has
/// generator eigenvalues `±1/2` and admits the `±π/2` parameter-shift rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(−iθ Z⊗Z / 2)` on two qubits.
    Rzz(usize, usize, f64),
    /// `|i⟩ → e^{iφ_i}|i⟩`, one phase per basis index.
    DiagonalPhase(Vec<f64>),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Rzz(a, b, _) => vec![a, b],
            Gate::DiagonalPhase(_) => Vec::new(),
        }
    }

    /// Rotation angle, for the parameterized kinds.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) | Gate::Rzz(_, _, a) => Some(a),
            _ => None,
        }
    }

    /// Same gate with its rotation angle shifted by `delta`; other kinds are
    /// returned unchanged.
    pub fn shifted(&self, delta: f64) -> Gate {
        match *self {
            Gate::Rx(q, a) => Gate::Rx(q, a + delta),
            Gate::Ry(q, a) => Gate::Ry(q, a + delta),
            Gate::Rz(q, a) => Gate::Rz(q, a + delta),
            Gate::Rzz(p, q, a) => Gate::Rzz(p, q, a + delta),
            ref g => g.clone(),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Rx(q, a) => Gate::Rx(*q, -a),
            Gate::Ry(q, a) => Gate::Ry(*q, -a),
            Gate::Rz(q, a) => Gate::Rz(*q, -a),
            Gate::Rzz(p, q, a) => Gate::Rzz(*p, *q, -a),
            Gate::DiagonalPhase(ph) => Gate::DiagonalPhase(ph.iter().map(|p| -p).collect()),
            g => g.clone(),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::invalid(
                MODULE,
                format!("{self:?}: qubit {q} out of range for {n_qubits} qubits"),
            ));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::invalid(MODULE, format!("{self:?}: repeated qubit")));
        }
        if let Gate::DiagonalPhase(ph) = self {
            if ph.len() != 1 << n_qubits {
                return Err(Error::invalid(
                    MODULE,
                    format!("diagonal phase of length {} on {n_qubits} qubits", ph.len()),
                ));
            }
        }
        Ok(())
    }

    /// Applies the gate in place. Indices must already be validated.
    pub(crate) fn apply_unchecked(&self, n: usize, amps: &mut [Complex64]) {
        match *self {
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (a, b) = (Complex64::new(s, 0.0), Complex64::new(-s, 0.0));
                single(n, q, amps, [a, a, a, b]);
            }
            Gate::X(q) => {
                let m = qubit_mask(n, q);
                for i in 0..amps.len() {
                    if i & m == 0 {
                        amps.swap(i, i | m);
                    }
                }
            }
            Gate::Rx(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let (cc, ms) = (Complex64::new(c, 0.0), Complex64::new(0.0, -s));
                single(n, q, amps, [cc, ms, ms, cc]);
            }
            Gate::Ry(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                single(
                    n,
                    q,
                    amps,
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(-s, 0.0),
                        Complex64::new(s, 0.0),
                        Complex64::new(c, 0.0),
                    ],
                );
            }
            Gate::Rz(q, t) => {
                let m = qubit_mask(n, q);
                let lo = Complex64::from_polar(1.0, -t / 2.0);
                let hi = lo.conj();
                for (i, a) in amps.iter_mut().enumerate() {
                    *a *= if i & m == 0 { lo } else { hi };
                }
            }
            Gate::Cnot { control, target } => {
                let (mc, mt) = (qubit_mask(n, control), qubit_mask(n, target));
                for i in 0..amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Rzz(p, q, t) => {
                let (mp, mq) = (qubit_mask(n, p), qubit_mask(n, q));
                let same = Complex64::from_polar(1.0, -t / 2.0);
                let diff = same.conj();
                for (i, a) in amps.iter_mut().enumerate() {
                    let parity = ((i & mp != 0) as u8) ^ ((i & mq != 0) as u8);
                    *a *= if parity == 0 { same } else { diff };
                }
            }
            Gate::DiagonalPhase(ref ph) => {
                for (a, &p) in amps.iter_mut().zip(ph) {
                    *a *= Complex64::from_polar(1.0, p);
                }
            }
        }
    }
}

/// `[[m00, m01], [m10, m11]]` on one qubit.
fn single(n: usize, q: usize, amps: &mut [Complex64], m: [Complex64; 4]) {
    let mask = qubit_mask(n, q);
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (x, y) = (amps[i], amps[j]);
            amps[i] = m[0] * x + m[1] * y;
            amps[j] = m[2] * x + m[3] * y;
        }
    }
}

/// Applies `gates` in order to a copy of `state`.
pub fn apply_circuit(state: &StateVector, gates: &[Gate]) -> Result<StateVector> {
    let n = state.n_qubits();
    for g in gates {
        g.validate(n)?;
    }
    let mut out = state.clone();
    for g in gates {
        g.apply_unchecked(n, out.amplitudes_mut());
    }
    Ok(out)
}

/// The exact inverse circuit.
pub fn inverse_circuit(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().map(Gate::inverse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_circuit_is_identity() {
        let s = StateVector::from_real(2, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(apply_circuit(&s, &[]).unwrap(), s);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let s = StateVector::zero(1);
        let out = apply_circuit(&s, &[Gate::H(0), Gate::H(0)]).unwrap();
        assert!(out.distance(&s) < 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩: qubit 0 set = index 0b10.
        let s = StateVector::basis(2, 0b10);
        let out = apply_circuit(&s, &[Gate::Cnot { control: 0, target: 1 }]).unwrap();
        assert!(out.distance(&StateVector::basis(2, 0b11)) < 1e-15);
        let s = StateVector::basis(2, 0b01);
        let out = apply_circuit(&s, &[Gate::Cnot { control: 0, target: 1 }]).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn rejects_bad_indices() {
        let s = StateVector::zero(2);
        assert!(apply_circuit(&s, &[Gate::H(2)]).is_err());
        assert!(apply_circuit(&s, &[Gate::Cnot { control: 1, target: 1 }]).is_err());
        assert!(apply_circuit(&s, &[Gate::DiagonalPhase(vec![0.0; 3])]).is_err());
    }

    #[test]
    fn ry_pi_flips() {
        let out = apply_circuit(&StateVector::zero(1), &[Gate::Ry(0, std::f64::consts::PI)]).unwrap();
        assert!((out.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let q = 0..n;
        let angle = -7.0..7.0f64;
        prop_oneof![
            q.clone().prop_map(Gate::H),
            q.clone().prop_map(Gate::X),
            (q.clone(), angle.clone()).prop_map(|(q, a)| Gate::Rx(q, a)),
            (q.clone(), angle.clone()).prop_map(|(q, a)| Gate::Ry(q, a)),
            (q.clone(), angle.clone()).prop_map(|(q, a)| Gate::Rz(q, a)),
            (q.clone(), 1..n.max(2)).prop_map(move |(c, d)| Gate::Cnot {
                control: c,
                target: (c + d) % n
            }),
            (q.clone(), 1..n.max(2), angle.clone()).prop_map(move |(a, d, t)| Gate::Rzz(a, (a + d) % n, t)),
            proptest::collection::vec(angle, 1 << n).prop_map(Gate::DiagonalPhase),
        ]
    }

    fn arb_case() -> impl Strategy<Value = (StateVector, Vec<Gate>)> {
        (2usize..=6).prop_flat_map(|n| {
            let amps = proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n);
            (amps, proptest::collection::vec(arb_gate(n), 0..=20)).prop_map(move |(a, g)| {
                let amps: Vec<Complex64> = a.into_iter().map(|(r, i)| Complex64::new(r, i + 1e-3)).collect();
                (StateVector::normalized(n, amps).unwrap(), g)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn circuit_then_inverse_restores_state((s, gates) in arb_case()) {
            let fwd = apply_circuit(&s, &gates).unwrap();
            prop_assert!((fwd.norm_sqr() - 1.0).abs() < 1e-10);
            let back = apply_circuit(&fwd, &inverse_circuit(&gates)).unwrap();
            prop_assert!(back.distance(&s) < 1e-9);
        }
    }
}
