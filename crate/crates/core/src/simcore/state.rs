use std::io::Write;

use num_complex::Complex64;

use super::{MAX_QUBITS, MODULE};
use crate::csvio::fmt_f64;
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// A normalized amplitude vector over `2^n_qubits` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Wraps amplitudes that are already normalized (within 1e-10).
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::invalid(
                MODULE,
                format!("{n_qubits} qubits exceeds {MAX_QUBITS}"),
            ));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::invalid(
                MODULE,
                format!("{} amplitudes for {n_qubits} qubits", amps.len()),
            ));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(MODULE, format!("squared norm {norm} is not 1")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Normalizes `amps` before wrapping them.
    pub fn normalized(n_qubits: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(MODULE, "cannot normalize a zero vector"));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Self::from_amplitudes(n_qubits, amps)
    }

    /// Real amplitudes, normalized.
    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Result<Self> {
        Self::normalized(n_qubits, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|ψ_i|²` for every basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Debug dump as `index,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |source| Error::Io { module: MODULE, source };
        writeln!(w, "index,re,im").map_err(io)?;
        for (i, a) in self.amps.iter().enumerate() {
            writeln!(w, "{i},{},{}", fmt_f64(a.re), fmt_f64(a.im)).map_err(io)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(StateVector::from_amplitudes(1, vec![Complex64::new(1.0, 0.0)]).is_err());
        let half = Complex64::new(0.5, 0.0);
        assert!(StateVector::from_amplitudes(1, vec![half, half]).is_err());
        assert!(StateVector::normalized(1, vec![Complex64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = StateVector::from_real(1, &[1.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,re,im");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,7.07106781186547"));
    }
}
