use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Observable, StateVector, MAX_QUBITS, MODULE};
use crate::{Error, RandomStream, Result};

/// Which Gaussian underlies a "Haar random" state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HaarConvention {
    /// Normalized i.i.d. complex Gaussians: squared amplitudes are
    /// Dirichlet(1, …, 1).
    Complex,
    /// Normalized i.i.d. real Gaussians: squared amplitudes are
    /// Dirichlet(½, …, ½).
    #[default]
    RealSphere,
}

impl HaarConvention {
    /// Dirichlet concentration per basis state.
    pub fn concentration(self) -> f64 {
        match self {
            HaarConvention::Complex => 1.0,
            HaarConvention::RealSphere => 0.5,
        }
    }
}

pub fn sample_haar_state(n_qubits: usize, convention: HaarConvention, stream: RandomStream) -> Result<StateVector> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::invalid(
            MODULE,
            format!("cannot sample a {n_qubits}-qubit state"),
        ));
    }
    let mut rng = stream.rng();
    let amps = (0..1usize << n_qubits)
        .map(|_| match convention {
            HaarConvention::Complex => Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            HaarConvention::RealSphere => Complex64::new(rng.sample(StandardNormal), 0.0),
        })
        .collect();
    StateVector::normalized(n_qubits, amps)
}

/// Dense unitary stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Unitary {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Unitary {
        let d = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Unitary { dim: d, entries }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim {
            return Err(Error::invalid(
                MODULE,
                format!(
                    "unitary of dimension {} on state of dimension {}",
                    self.dim,
                    state.dim()
                ),
            ));
        }
        let a = state.amplitudes();
        let out = (0..self.dim)
            .map(|r| {
                let row = &self.entries[r * self.dim..(r + 1) * self.dim];
                row.iter().zip(a).map(|(u, x)| u * x).sum()
            })
            .collect();
        StateVector::normalized(state.n_qubits(), out)
    }

    /// `max_ij |(U†U − I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the
/// triangular factor's diagonal made positive.
///
/// Gram–Schmidt on the columns produces that factor directly; a second
/// orthogonalization pass keeps the columns orthonormal to rounding.
pub fn sample_unitary(dim: usize, stream: RandomStream) -> Result<Unitary> {
    if dim < 2 {
        return Err(Error::invalid(
            MODULE,
            format!("unitary dimension must be at least 2, got {dim}"),
        ));
    }
    let mut rng = stream.rng();
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..dim {
        for _pass in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let qi = &done[i];
                let proj: Complex64 = qi.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
                for (v, q) in rest[0].iter_mut().zip(qi) {
                    *v -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            entries[r * dim + c] = *v;
        }
    }
    Ok(Unitary { dim, entries })
}

/// `k` uniformly random transpositions of `{0, …, dim − 1}`, each swapping
/// two distinct indices.
pub fn random_transpositions(dim: usize, k: usize, stream: RandomStream) -> Vec<(usize, usize)> {
    if dim < 2 {
        return Vec::new();
    }
    let mut rng = stream.rng();
    (0..k)
        .map(|_| {
            let i = rng.random_range(0..dim);
            let mut j = rng.random_range(0..dim - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// `Π O Π†` for `Π` the composition of `k` random transpositions.
pub fn permuted_observable(obs: &Observable, k: usize, stream: RandomStream) -> Result<Observable> {
    let diagonal = obs
        .diagonal()
        .ok_or_else(|| Error::invalid(MODULE, "only diagonal observables can be permuted"))?;
    let mut permutation: Vec<usize> = (0..diagonal.len()).collect();
    for (i, j) in random_transpositions(diagonal.len(), k, stream) {
        permutation.swap(i, j);
    }
    Ok(Observable::PermutedDiagonal { diagonal, permutation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, sample_variance};

    #[test]
    fn samples_are_normalized() {
        for conv in [HaarConvention::Complex, HaarConvention::RealSphere] {
            for i in 0..20 {
                let s = sample_haar_state(4, conv, RandomStream::new(3).substream(i)).unwrap();
                assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }

    fn projector_values(conv: HaarConvention, draws: u64) -> Vec<f64> {
        let p = Observable::basis_projector(2, &[0]);
        crate::par::map_range(draws as usize, |i| {
            let s = sample_haar_state(1, conv, RandomStream::new(11).substream(i as u64)).unwrap();
            p.expectation(&s).unwrap()
        })
    }

    fn check_variance(values: &[f64], expected: f64) {
        // Standard error of the sample variance from the fourth central moment.
        let m = mean(values);
        let v = sample_variance(values);
        let m4 = values.iter().map(|x| (x - m).powi(4)).sum::<f64>() / values.len() as f64;
        let se = ((m4 - v * v) / values.len() as f64).sqrt();
        assert!((v - expected).abs() < 3.0 * se, "variance {v} vs {expected} (se {se})");
    }

    #[test]
    fn complex_single_qubit_projector_is_uniform() {
        check_variance(&projector_values(HaarConvention::Complex, 1_000_000), 1.0 / 12.0);
    }

    #[test]
    fn real_single_qubit_projector_is_arcsine() {
        check_variance(&projector_values(HaarConvention::RealSphere, 1_000_000), 1.0 / 8.0);
    }

    #[test]
    fn unitaries_are_unitary() {
        for d in [2, 3, 4, 8, 16] {
            let u = sample_unitary(d, RandomStream::new(d as u64)).unwrap();
            assert!(u.unitarity_error() < 1e-10);
            for c in 0..d {
                let n: f64 = (0..d).map(|r| u.get(r, c).norm_sqr()).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
        assert!(sample_unitary(1, RandomStream::new(0)).is_err());
    }

    #[test]
    fn corner_entry_has_uniform_column_mean() {
        let vals = crate::par::map_range(100_000, |i| {
            sample_unitary(2, RandomStream::new(5).substream(i as u64))
                .unwrap()
                .get(0, 0)
                .norm_sqr()
        });
        let se = (sample_variance(&vals) / vals.len() as f64).sqrt();
        assert!((mean(&vals) - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn haar_invariance_smoke() {
        let w = sample_unitary(8, RandomStream::new(99)).unwrap();
        let obs = Observable::basis_projector(8, &[0, 3, 5]);
        let n = 20_000;
        let plain = crate::par::map_range(n, |i| {
            let s = sample_haar_state(3, HaarConvention::Complex, RandomStream::new(1).substream(i as u64)).unwrap();
            obs.expectation(&s).unwrap()
        });
        let rotated = crate::par::map_range(n, |i| {
            let s = sample_haar_state(3, HaarConvention::Complex, RandomStream::new(2).substream(i as u64)).unwrap();
            obs.expectation(&w.apply(&s).unwrap()).unwrap()
        });
        let se = ((sample_variance(&plain) + sample_variance(&rotated)) / n as f64).sqrt();
        assert!((mean(&plain) - mean(&rotated)).abs() < 3.0 * se);
    }

    #[test]
    fn permutation_preserves_spectrum() {
        let d: Vec<f64> = (0..16).map(|i| f64::from(i as u32 % 5)).collect();
        let obs = Observable::Diagonal(d.clone());
        let same = permuted_observable(&obs, 0, RandomStream::new(0)).unwrap();
        assert_eq!(same.diagonal().unwrap(), d);
        for k in [1, 5, 15] {
            let p = permuted_observable(&obs, k, RandomStream::new(k as u64)).unwrap();
            let mut a = p.diagonal().unwrap();
            let mut b = d.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transpositions_are_proper_and_replayable() {
        let a = random_transpositions(10, 50, RandomStream::new(4));
        assert!(a.iter().all(|&(i, j)| i != j && i < 10 && j < 10));
        assert_eq!(a, random_transpositions(10, 50, RandomStream::new(4)));
    }

    #[test]
    fn sample_sequence_is_thread_count_invariant() {
        let run = |threads| {
            crate::par::with_threads(threads, || {
                crate::par::map_range(64, |i| {
                    sample_haar_state(3, HaarConvention::Complex, RandomStream::new(8).substream(i as u64))
                        .unwrap()
                        .amplitudes()
                        .to_vec()
                })
            })
        };
        assert_eq!(run(1), run(4));
    }
}
