//! Discrete-logarithm concept class over `Z_p^*`.
//!
//! Basis index `j` of the `n = ⌈log₂ p⌉`-qubit register stands for the group
//! element `j`; indices `0` and `p..2^n` are never populated. Exponents of the
//! generator are taken in `{1, …, p − 1}`, so `log 1 = p − 1`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::margin::{empirical_failure, EmpiricalFailure, MarginSample, MarginSpec};
use crate::moments::{haar_mean, haar_variance, Spectrum};
use crate::simcore::{Observable, StateVector};
use crate::{par, Error, RandomStream, Result};

const MODULE: &str = "dlp";

/// Largest prime [`dlp_report`] enumerates by default.
pub const DEFAULT_PRIME_CAP: u64 = 4099;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(p)) as u64
}

/// Multiplicative order of `g` modulo prime `p`.
pub fn multiplicative_order(g: u64, p: u64) -> u64 {
    let mut x = g % p;
    let mut k = 1;
    while x != 1 {
        x = mul_mod(x, g, p);
        k += 1;
    }
    k
}

pub fn is_generator(g: u64, p: u64) -> bool {
    !g.is_multiple_of(p) && multiplicative_order(g, p) == p - 1
}

/// Smallest generator of `Z_p^*`.
pub fn find_generator(p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::invalid(MODULE, format!("{p} is not prime")));
    }
    if p == 2 {
        return Ok(1);
    }
    Ok((2..p)
        .find(|&g| is_generator(g, p))
        .expect("cyclic group has a generator"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlpInstance {
    pub p: u64,
    pub g: u64,
    pub s: u64,
    pub k_exp: u32,
    pub n_qubits: usize,
    /// `powers[i] = g^i mod p` for `i < p − 1`.
    powers: Vec<u64>,
    /// `dlog[x]` in `{1, …, p − 1}`; entry 0 unused.
    dlog: Vec<u64>,
}

impl DlpInstance {
    /// `g = None` picks the smallest generator.
    pub fn new(p: u64, g: Option<u64>, s: u64, k_exp: u32) -> Result<Self> {
        if !is_prime(p) || p < 5 {
            return Err(Error::invalid(MODULE, format!("p must be an odd prime ≥ 5, got {p}")));
        }
        let g = match g {
            Some(g) if is_generator(g, p) => g,
            Some(g) => return Err(Error::invalid(MODULE, format!("{g} does not generate Z_{p}^*"))),
            None => find_generator(p)?,
        };
        if s == 0 || s >= p {
            return Err(Error::invalid(
                MODULE,
                format!("concept index s must lie in 1..{p}, got {s}"),
            ));
        }
        if k_exp >= 63 || (1u64 << k_exp) > p - 1 {
            return Err(Error::invalid(
                MODULE,
                format!("2^{k_exp} superposed elements exceed the group order"),
            ));
        }
        let n_qubits = (64 - (p - 1).leading_zeros()) as usize;
        let order = (p - 1) as usize;
        let mut powers = Vec::with_capacity(order);
        let mut dlog = vec![0u64; p as usize];
        let mut x = 1;
        for i in 0..order {
            powers.push(x);
            dlog[x as usize] = if i == 0 { p - 1 } else { i as u64 };
            x = mul_mod(x, g, p);
        }
        Ok(DlpInstance {
            p,
            g,
            s,
            k_exp,
            n_qubits,
            powers,
            dlog,
        })
    }

    fn order(&self) -> u64 {
        self.p - 1
    }

    /// `Δ = 2^{k+1} / p`.
    pub fn delta(&self) -> f64 {
        2f64.powi(self.k_exp as i32 + 1) / self.p as f64
    }

    /// Whether `Δ < 1/2`.
    pub fn admissible(&self) -> bool {
        self.delta() < 0.5
    }

    fn check_element(&self, x: u64) -> Result<()> {
        if x == 0 || x >= self.p {
            return Err(Error::invalid(MODULE, format!("{x} is not in Z_{}^*", self.p)));
        }
        Ok(())
    }

    pub fn discrete_log(&self, x: u64) -> Result<u64> {
        self.check_element(x)?;
        Ok(self.dlog[x as usize])
    }

    /// `g^e mod p` for any exponent.
    pub fn power(&self, e: u64) -> u64 {
        self.powers[(e % self.order()) as usize]
    }

    /// Half-interval length `(p − 1)/2`.
    fn half(&self) -> u64 {
        self.order() / 2
    }

    /// Offset of `log x` from `s` on the exponent circle.
    fn offset(&self, x: u64) -> u64 {
        (self.dlog[x as usize] + self.order() - self.s % self.order()) % self.order()
    }

    /// 1 when `log x` lies in the cyclic interval `[s, s + (p−3)/2]`.
    pub fn label(&self, x: u64) -> Result<u8> {
        self.check_element(x)?;
        Ok(u8::from(self.offset(x) < self.half()))
    }

    fn support_state(&self, elements: impl Iterator<Item = u64>, count: usize) -> StateVector {
        let amp = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n_qubits];
        for e in elements {
            amps[e as usize] = amp;
        }
        StateVector::from_amplitudes(self.n_qubits, amps).expect("distinct elements give a unit vector")
    }

    /// Uniform superposition of `x·g^i` for `i < 2^k`.
    pub fn state(&self, x: u64) -> Result<StateVector> {
        self.check_element(x)?;
        let len = 1usize << self.k_exp;
        let lx = self.dlog[x as usize];
        Ok(self.support_state((0..len as u64).map(|i| self.power(lx + i)), len))
    }

    /// States on the exponent half-intervals `s + [0, (p−3)/2]` (class 1)
    /// and `s + [(p−1)/2, p−2]` (class 0).
    pub fn hyperplane_states(&self) -> (StateVector, StateVector) {
        let h = self.half();
        let one = self.support_state((0..h).map(|i| self.power(self.s + i)), h as usize);
        let zero = self.support_state((h..2 * h).map(|i| self.power(self.s + i)), h as usize);
        (one, zero)
    }

    /// `Ẑ_s` for a point of class `y`: `(I + (−1)^y (Π_1 − Π_0)) / 2`.
    pub fn observable(&self, y: u8) -> Observable {
        let (one, zero) = self.hyperplane_states();
        let sign = if y == 0 { 1.0 } else { -1.0 };
        Observable::projector_pair(one, zero, sign).expect("hyperplane states are orthogonal")
    }

    /// Label-aware margin of `x` from statevector inner products.
    pub fn zs_margin(&self, x: u64) -> Result<f64> {
        let y = self.label(x)?;
        self.observable(y).expectation(&self.state(x)?)
    }

    /// Same margin from interval counting: of the `2^k` exponents
    /// `log x + i`, `c_1` land in the class-1 half, so
    /// `⟨Π_1⟩ = c_1² · 2 / (2^k (p − 1))` and likewise for class 0.
    pub fn zs_margin_counting(&self, x: u64) -> Result<f64> {
        let y = self.label(x)?;
        let (p1, p0) = self.projector_weights(x);
        let sign = if y == 0 { 1.0 } else { -1.0 };
        Ok(0.5 * (1.0 + sign * (p1 - p0)))
    }

    fn projector_weights(&self, x: u64) -> (f64, f64) {
        let n = self.order();
        let h = self.half();
        let len = 1u64 << self.k_exp;
        let a = self.offset(x);
        let overlap = |lo: u64, hi: u64| (a + len).min(hi).saturating_sub(a.max(lo));
        let c1 = overlap(0, h) + overlap(n, n + h);
        let c0 = len - c1;
        let norm = 2.0 / (len as f64 * n as f64);
        ((c1 * c1) as f64 * norm, (c0 * c0) as f64 * norm)
    }

    /// Spectrum of `Ẑ_s` on the `2^n`-dimensional register.
    pub fn spectrum(&self) -> Spectrum {
        let dim = 1u64 << self.n_qubits;
        Spectrum::new(vec![(1.0, 1), (0.0, 1), (0.5, dim - 2)]).expect("valid spectrum")
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> {
        1..self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlpReport {
    pub p: u64,
    pub g: u64,
    pub s: u64,
    pub k_exp: u32,
    pub n_qubits: usize,
    pub delta_cap: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub haar_mean: f64,
    pub haar_variance: f64,
    pub a1: f64,
    pub a2: f64,
    /// `Δ/2 − Δ² ≤ A_1 ≤ Δ/2`.
    pub g8_pass: bool,
    /// `σ² ≤ Δ²`.
    pub g10_pass: bool,
    pub h1_bound: f64,
    pub h1_vacuous: bool,
    /// Largest disagreement between the two margin routes.
    pub oracle_gap: f64,
    pub failure: EmpiricalFailure,
}

/// `Δ² / (Δ/2 − Δ² − w)²`, or 1 when the bracket is not positive.
pub fn h1_bound(delta_cap: f64, spec: &MarginSpec) -> (f64, bool) {
    let gap = delta_cap / 2.0 - delta_cap * delta_cap - spec.window();
    if gap <= 0.0 {
        (1.0, true)
    } else {
        ((delta_cap * delta_cap / (gap * gap)).min(1.0), false)
    }
}

/// Margins of every element of `Z_p^*` as margin samples.
pub fn margin_samples(inst: &DlpInstance) -> Result<Vec<MarginSample>> {
    let xs: Vec<u64> = inst.elements().collect();
    par::map_slice(&xs, |&x| {
        let y = inst.label(x)?;
        // Label-free expectation of (I + Π_1 − Π_0)/2; its class margin at
        // b = 1/2 is the Ẑ_s expectation.
        let o = inst.observable(0).expectation(&inst.state(x)?)?;
        let mut s = MarginSample::new(x, y, o, 0.5)?;
        s.z = inst.zs_margin(x)?;
        Ok(s)
    })
    .into_iter()
    .collect()
}

/// Exhaustive statistics, bound checks and shot-level failure for one
/// instance.
pub fn dlp_report(inst: &DlpInstance, spec: &MarginSpec, trials: usize, stream: RandomStream) -> Result<DlpReport> {
    dlp_report_with_cap(inst, spec, trials, stream, DEFAULT_PRIME_CAP)
}

pub fn dlp_report_with_cap(
    inst: &DlpInstance,
    spec: &MarginSpec,
    trials: usize,
    stream: RandomStream,
    cap: u64,
) -> Result<DlpReport> {
    if inst.p > cap {
        return Err(Error::ResourceCap {
            module: MODULE,
            what: "prime for exhaustive enumeration",
            requested: u128::from(inst.p),
            cap: u128::from(cap),
        });
    }
    let samples = margin_samples(inst)?;
    let xs: Vec<u64> = inst.elements().collect();
    let counted: Vec<f64> = par::map_slice(&xs, |&x| inst.zs_margin_counting(x).expect("element in range"));
    let oracle_gap = samples
        .iter()
        .zip(&counted)
        .map(|(s, c)| (s.z - c).abs())
        .fold(0.0, f64::max);

    let z: Vec<f64> = samples.iter().map(|s| s.z).collect();
    let n = z.len() as f64;
    let mu1 = z.iter().sum::<f64>() / n;
    let mu2 = z.iter().map(|v| v * v).sum::<f64>() / n;
    let sigma2 = z.iter().map(|v| (v - mu1).powi(2)).sum::<f64>() / n;

    let spectrum = inst.spectrum();
    let hm = haar_mean(&spectrum, 0.5);
    let hv = haar_variance(&spectrum, 0.5);
    let d = inst.delta();
    let a1 = (mu1 - hm).abs();
    let a2 = (sigma2 - hv).abs();
    let (h1, h1_vacuous) = h1_bound(d, spec);
    let failure = empirical_failure(&samples, spec, trials, stream)?;
    Ok(DlpReport {
        p: inst.p,
        g: inst.g,
        s: inst.s,
        k_exp: inst.k_exp,
        n_qubits: inst.n_qubits,
        delta_cap: d,
        mu1,
        mu2,
        sigma2,
        haar_mean: hm,
        haar_variance: hv,
        a1,
        a2,
        g8_pass: d / 2.0 - d * d <= a1 && a1 <= d / 2.0,
        g10_pass: sigma2 <= d * d,
        h1_bound: h1,
        h1_vacuous,
        oracle_gap,
        failure,
    })
}

pub fn write_report_csv<W: Write>(reports: &[DlpReport], w: W) -> Result<()> {
    let mut t = Table::new(&[
        "p",
        "g",
        "s",
        "k_exp",
        "n",
        "delta_cap",
        "mu1",
        "mu2",
        "sigma2",
        "A1",
        "A2",
        "G8_pass",
        "G10_pass",
        "H1_bound",
        "empirical_failure",
        "failure_stderr",
    ]);
    for r in reports {
        t.push(vec![
            r.p.to_string(),
            r.g.to_string(),
            r.s.to_string(),
            r.k_exp.to_string(),
            r.n_qubits.to_string(),
            fmt_f64(r.delta_cap),
            fmt_f64(r.mu1),
            fmt_f64(r.mu2),
            fmt_f64(r.sigma2),
            fmt_f64(r.a1),
            fmt_f64(r.a2),
            fmt_bool(r.g8_pass),
            fmt_bool(r.g10_pass),
            fmt_f64(r.h1_bound),
            fmt_f64(r.failure.shot_rate),
            fmt_f64(r.failure.shot_std_error),
        ]);
    }
    t.write(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: u64, s: u64, k: u32) -> DlpInstance {
        DlpInstance::new(p, None, s, k).unwrap()
    }

    #[test]
    fn generators() {
        assert_eq!(find_generator(11).unwrap(), 2);
        assert_eq!(find_generator(7).unwrap(), 3);
        assert!(!is_generator(4, 5));
        assert!(find_generator(12).is_err());
        assert!(DlpInstance::new(5, Some(4), 1, 1).is_err());
    }

    #[test]
    fn logs_and_labels() {
        let d = inst(11, 1, 1);
        assert_eq!(d.discrete_log(8).unwrap(), 3);
        assert_eq!(d.discrete_log(2).unwrap(), 1);
        assert_eq!(d.discrete_log(1).unwrap(), 10);
        assert!(d.discrete_log(0).is_err());
        assert_eq!(d.label(8).unwrap(), 1);
        assert_eq!(d.label(6).unwrap(), 0);
        assert_eq!(d.label(d.power(d.s)).unwrap(), 1);
        for x in 1..11 {
            assert_eq!(d.power(d.discrete_log(x).unwrap()), x);
        }
    }

    #[test]
    fn labels_are_balanced() {
        for p in [11, 59, 103] {
            for s in 1..p {
                let d = inst(p, s, 1);
                let ones = d.elements().filter(|&x| d.label(x).unwrap() == 1).count() as u64;
                assert_eq!(ones, (p - 1) / 2);
            }
        }
    }

    #[test]
    fn feature_states() {
        let d = inst(11, 1, 0);
        assert_eq!(d.state(7).unwrap(), StateVector::basis(4, 7));
        let d = inst(11, 1, 1);
        let s = d.state(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[1].re - h).abs() < 1e-15 && (s.amplitudes()[2].re - h).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hyperplanes() {
        let d = inst(11, 1, 1);
        let (one, zero) = d.hyperplane_states();
        assert!(one.inner(&zero).norm() < 1e-15);
        let support: Vec<usize> = (0..16).filter(|&i| one.amplitudes()[i].norm() > 0.0).collect();
        assert_eq!(support, vec![2, 4, 5, 8, 10]);
        let a = (2.0f64 / 10.0).sqrt();
        assert!(zero
            .amplitudes()
            .iter()
            .filter(|v| v.norm() > 0.0)
            .all(|v| (v.re - a).abs() < 1e-15));
    }

    #[test]
    fn orthogonal_state_sits_at_one_half() {
        let d = inst(11, 1, 1);
        let outside = StateVector::basis(4, 13);
        assert!((d.observable(1).expectation(&outside).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn margin_oracles_agree() {
        for (p, k) in [(11, 1), (59, 2), (103, 3)] {
            for s in [1, 2, (p - 1) / 2] {
                let d = inst(p, s, k);
                for x in d.elements() {
                    let a = d.zs_margin(x).unwrap();
                    let b = d.zs_margin_counting(x).unwrap();
                    assert!((a - b).abs() < 1e-12, "p={p} s={s} x={x}");
                }
            }
        }
    }

    #[test]
    fn typical_correct_margin() {
        let d = inst(103, 1, 3);
        let delta = 16.0 / 103.0;
        // An element whose whole orbit stays in its own half.
        let x = d.power(d.s + 10);
        let z = d.zs_margin(x).unwrap();
        let want = 0.5 * (1.0 - 64.0 * 2.0 / (8.0 * 102.0));
        assert!((z - want).abs() < 1e-12);
        assert!((z - (1.0 - delta) / 2.0).abs() < delta);
    }

    #[test]
    fn symmetry_under_class_swap() {
        for (p, k) in [(59, 2), (103, 3)] {
            let a = inst(p, 3, k);
            let b = inst(p, 3 + (p - 1) / 2, k);
            for x in a.elements() {
                assert_eq!(a.label(x).unwrap(), 1 - b.label(x).unwrap());
                assert!((a.zs_margin(x).unwrap() - b.zs_margin(x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn report_basics() {
        let d = inst(59, 1, 2);
        assert!((d.delta() - 8.0 / 59.0).abs() < 1e-15);
        let spec = MarginSpec::new(0.5, 2000, 0.05).unwrap();
        let r = dlp_report(&d, &spec, 50, RandomStream::new(1)).unwrap();
        assert_eq!(r.haar_mean, 0.5);
        assert!(r.oracle_gap < 1e-12);
        assert!((r.mu2 - r.mu1 * r.mu1 - r.sigma2).abs() < 1e-12);
        let big = DlpInstance::new(4111, None, 1, 4).unwrap();
        assert!(matches!(
            dlp_report(&big, &spec, 1, RandomStream::new(1)),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn exhaustive_gap_decays_polynomially() {
        let spec = MarginSpec::new(0.5, 2000, 0.05).unwrap();
        let series: Vec<(f64, f64, f64)> = [59u64, 103, 251, 509, 1021]
            .iter()
            .map(|&p| {
                let n = 64 - (p - 1).leading_zeros();
                let r = dlp_report(&inst(p, 1, n - 4), &spec, 0, RandomStream::new(0)).unwrap();
                (f64::from(n), r.mu1, r.sigma2)
            })
            .collect();
        let rep = crate::margin::efficiency_diagnostics(&series, 0.5).unwrap();
        assert_eq!(rep.gap.class, crate::margin::Decay::Polynomial);
    }
}
