//! Haar reference moments and ensemble moment estimates.
//!
//! For a Haar-random state the weights `u_i = ⟨ψ|P_i|ψ⟩` on the eigenspaces of
//! an observable are Dirichlet distributed with parameters `α_i = a·m_i`,
//! where `m_i` is the multiplicity and `a` the concentration of the chosen
//! [`HaarConvention`]. Every reference moment below is a moment of
//! `Σ λ_i u_i` under that law.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::simcore::{HaarConvention, Observable};
use crate::special::{binomial_exact, ln_rising, CompensatedSum};
use crate::stats::{bootstrap, centered_moments, raw_moments, replicate_std};
use crate::{Error, RandomStream, Result};

const MODULE: &str = "moments";

/// Eigenvalues closer than this are merged.
pub const MERGE_TOL: f64 = 1e-9;

/// Default limit on the number of eigenvalue compositions a reference moment
/// may involve.
pub const DEFAULT_COMPOSITION_CAP: u128 = 10_000_000;

pub const DEFAULT_BOOTSTRAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    entries: Vec<(f64, u64)>,
    total_dim: u64,
}

impl Spectrum {
    /// Builds a spectrum from `(eigenvalue, multiplicity)` pairs, sorting and
    /// merging eigenvalues within [`MERGE_TOL`].
    pub fn new(mut entries: Vec<(f64, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid(MODULE, "empty spectrum"));
        }
        if entries.iter().any(|&(l, m)| m == 0 || !l.is_finite()) {
            return Err(Error::invalid(
                MODULE,
                "multiplicities must be positive and eigenvalues finite",
            ));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(entries.len());
        for (l, m) in entries {
            match merged.last_mut() {
                Some(last) if (l - last.0).abs() <= MERGE_TOL => last.1 += m,
                _ => merged.push((l, m)),
            }
        }
        let total_dim = merged.iter().map(|e| e.1).sum();
        Ok(Spectrum {
            entries: merged,
            total_dim,
        })
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        Self::new(diagonal.iter().map(|&v| (v, 1)).collect())
    }

    /// `(1, rank)` and `(0, dim − rank)`.
    pub fn projector(rank: u64, dim: u64) -> Result<Self> {
        if rank > dim {
            return Err(Error::invalid(MODULE, format!("rank {rank} exceeds dimension {dim}")));
        }
        let entries = [(1.0, rank), (0.0, dim - rank)]
            .into_iter()
            .filter(|e| e.1 > 0)
            .collect();
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn total_dim(&self) -> u64 {
        self.total_dim
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dirichlet(&self, a: f64) -> DirichletParams {
        let alphas: Vec<f64> = self.entries.iter().map(|&(_, m)| a * m as f64).collect();
        DirichletParams {
            alpha0: a * self.total_dim as f64,
            alphas,
            concentration: a,
        }
    }

    fn shifted(&self, by: f64) -> Spectrum {
        Spectrum {
            entries: self.entries.iter().map(|&(l, m)| (l - by, m)).collect(),
            total_dim: self.total_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub alphas: Vec<f64>,
    pub alpha0: f64,
    pub concentration: f64,
}

/// Spectrum of a supported observable.
///
/// Diagonal kinds are read off directly. A projector pair has eigenvalues
/// `(1 ± sign)/2` on its two states and `1/2` elsewhere. A Pauli sum is
/// handled when it is diagonal or when it is `c_0 I + c_1 P` for a single
/// non-identity string `P`.
pub fn spectrum_of(obs: &Observable) -> Result<Spectrum> {
    if let Some(d) = obs.diagonal() {
        return Spectrum::from_diagonal(&d);
    }
    let dim = obs.dim() as u64;
    match obs {
        Observable::ProjectorPair { sign, .. } => {
            let mut entries = vec![((1.0 + sign) / 2.0, 1), ((1.0 - sign) / 2.0, 1)];
            if dim > 2 {
                entries.push((0.5, dim - 2));
            }
            Spectrum::new(entries)
        }
        Observable::PauliSum { terms, .. } => {
            let c0: f64 = terms.iter().filter(|t| t.is_identity()).map(|t| t.coeff).sum();
            let rest: Vec<_> = terms.iter().filter(|t| !t.is_identity()).collect();
            match rest.as_slice() {
                [p] => Spectrum::new(vec![(c0 + p.coeff, dim / 2), (c0 - p.coeff, dim / 2)]),
                _ => Err(Error::Unsupported {
                    module: MODULE,
                    msg: "spectrum of a non-diagonal sum of several Pauli strings".into(),
                }),
            }
        }
        _ => unreachable!("diagonal kinds handled above"),
    }
}

/// `Σ λ_i α_i / α_0`, which equals `Tr O / dim` for any concentration.
pub fn haar_mean(spec: &Spectrum, _a: f64) -> f64 {
    let d = spec.total_dim as f64;
    let mut s = CompensatedSum::new();
    for &(l, m) in &spec.entries {
        s.add(l * m as f64 / d);
    }
    s.value()
}

/// Dirichlet variance of `Σ λ_i u_i`.
///
/// Written as `Σ (λ_i − μ)² α_i / (α_0 (α_0 + 1))`, which is the usual
/// second-moment-minus-cross-term expression regrouped so that it is a sum of
/// non-negative terms.
pub fn haar_variance(spec: &Spectrum, a: f64) -> f64 {
    let p = spec.dirichlet(a);
    let mu = haar_mean(spec, a);
    let mut s = CompensatedSum::new();
    for (&(l, _), &al) in spec.entries.iter().zip(&p.alphas) {
        s.add((l - mu).powi(2) * (al / p.alpha0));
    }
    s.value() / (p.alpha0 + 1.0)
}

/// Number of weak compositions of `t` into `parts` parts.
pub fn composition_count(t: u32, parts: usize) -> Option<u128> {
    binomial_exact(u64::from(t) + parts as u64 - 1, parts as u64 - 1)
}

fn check_cap(spec: &Spectrum, t: u32, cap: u128) -> Result<()> {
    let count = composition_count(t, spec.len()).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::ResourceCap {
            module: MODULE,
            what: "eigenvalue compositions",
            requested: count,
            cap,
        });
    }
    Ok(())
}

/// `E[(Σ λ_i u_i)^t]` under `Dirichlet(a·m)`.
pub fn haar_raw_moment(spec: &Spectrum, t: u32, a: f64) -> Result<f64> {
    haar_raw_moment_with_cap(spec, t, a, DEFAULT_COMPOSITION_CAP)
}

/// [`haar_raw_moment`] with an explicit composition cap.
///
/// The exact sum over compositions `l` of `t`,
/// `t!/∏l_i! · ∏λ_i^{l_i} · (α_i)_{l_i} / (α_0)_t`, factorizes per
/// eigenvalue, so it is evaluated as the `x^t` coefficient of
/// `∏_i Σ_l λ_i^l (α_i)_l / (l! α_0^l) x^l` and rescaled by
/// `t! α_0^t / (α_0)_t`. Scaling each factor by `α_0^l` keeps every partial
/// product of order one even for very large `α_0`.
pub fn haar_raw_moment_with_cap(spec: &Spectrum, t: u32, a: f64, cap: u128) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid(MODULE, "moment order must be at least 1"));
    }
    if !(a > 0.0) {
        return Err(Error::invalid(
            MODULE,
            format!("concentration must be positive, got {a}"),
        ));
    }
    check_cap(spec, t, cap)?;
    let p = spec.dirichlet(a);
    let t = t as usize;
    let mut poly = vec![0.0; t + 1];
    poly[0] = 1.0;
    for (&(lambda, _), &alpha) in spec.entries.iter().zip(&p.alphas) {
        // c_l = λ^l (α)_l / (l! α_0^l), built by the recurrence
        // c_{l} = c_{l−1} · λ (α + l − 1) / (l α_0).
        let mut factor = vec![1.0; t + 1];
        for l in 1..=t {
            factor[l] = factor[l - 1] * lambda * (alpha + (l - 1) as f64) / (l as f64 * p.alpha0);
        }
        let mut next = vec![0.0; t + 1];
        for (i, &pi) in poly.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (l, &fl) in factor.iter().enumerate().take(t + 1 - i) {
                next[i + l] += pi * fl;
            }
        }
        poly = next;
    }
    // t! α_0^t / (α_0)_t = Π_{j<t} (j+1) / (1 + j/α_0)
    let scale: f64 = (0..t).map(|j| (j + 1) as f64 / (1.0 + j as f64 / p.alpha0)).product();
    Ok(poly[t] * scale)
}

/// `E[(⟨O⟩ − μ_1)^t]`: the raw moment of the mean-shifted spectrum, which is
/// exact because the Dirichlet weights sum to one.
pub fn haar_centered_moment(spec: &Spectrum, t: u32, a: f64) -> Result<f64> {
    haar_centered_moment_with_cap(spec, t, a, DEFAULT_COMPOSITION_CAP)
}

pub fn haar_centered_moment_with_cap(spec: &Spectrum, t: u32, a: f64, cap: u128) -> Result<f64> {
    if t == 1 {
        check_cap(spec, t, cap)?;
        return Ok(0.0);
    }
    let mu = haar_mean(spec, a);
    haar_raw_moment_with_cap(&spec.shifted(mu), t, a, cap)
}

/// Centered moment from the binomial expansion over raw moments, with its
/// cancellation diagnostic `max |term| / |result|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialCentered {
    pub value: f64,
    pub cancellation: f64,
}

pub fn haar_centered_moment_binomial(spec: &Spectrum, t: u32, a: f64) -> Result<BinomialCentered> {
    let mu = haar_mean(spec, a);
    let mut s = CompensatedSum::new();
    for k in 0..=t {
        let raw = if k == 0 { 1.0 } else { haar_raw_moment(spec, k, a)? };
        let c = binomial_exact(u64::from(t), u64::from(k)).expect("small binomial") as f64;
        let sign = if (t - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        s.add(sign * c * mu.powi((t - k) as i32) * raw);
    }
    Ok(BinomialCentered {
        value: s.value(),
        cancellation: s.cancellation(),
    })
}

/// The Dirichlet law itself, for Monte-Carlo checks of the formulas above.
pub fn dirichlet_log_normalizer(p: &DirichletParams, l: &[u32]) -> f64 {
    let total: u32 = l.iter().sum();
    p.alphas.iter().zip(l).map(|(&a, &k)| ln_rising(a, k)).sum::<f64>() - ln_rising(p.alpha0, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Raw,
    Centered,
}

impl MomentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentKind::Raw => "raw",
            MomentKind::Centered => "centered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub t: u32,
    pub kind: MomentKind,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Raw and centered sample moments for `t = 1..=t_max` with bootstrap
/// standard errors; raw estimates come first.
pub fn estimate_moments(
    values: &[f64],
    t_max: u32,
    resamples: usize,
    stream: RandomStream,
) -> Result<Vec<MomentEstimate>> {
    if values.len() < 2 {
        return Err(Error::invalid(MODULE, "need at least two values"));
    }
    if t_max == 0 {
        return Err(Error::invalid(MODULE, "t_max must be at least 1"));
    }
    let tm = t_max as usize;
    let stat = |v: &[f64]| {
        let mut out = raw_moments(v, tm);
        out.extend(centered_moments(v, tm));
        out
    };
    let point = stat(values);
    let reps = bootstrap(values.len(), resamples, stream, |idx| {
        let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        stat(&v)
    });
    let se = if resamples >= 2 {
        replicate_std(&reps)
    } else {
        vec![0.0; 2 * tm]
    };
    let n = values.len();
    Ok((0..2 * tm)
        .map(|j| MomentEstimate {
            t: (j % tm) as u32 + 1,
            kind: if j < tm { MomentKind::Raw } else { MomentKind::Centered },
            value: point[j],
            std_error: se[j],
            n_samples: n,
        })
        .collect())
}

pub fn write_moments_csv<W: Write>(estimates: &[MomentEstimate], w: W) -> Result<()> {
    let mut t = Table::new(&["t", "kind", "value", "std_error", "n_samples"]);
    for e in estimates {
        t.push(vec![
            e.t.to_string(),
            e.kind.as_str().into(),
            fmt_f64(e.value),
            fmt_f64(e.std_error),
            e.n_samples.to_string(),
        ]);
    }
    t.write(w)
}

/// Which ensemble moment is compared against the Haar reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Comparison {
    /// Raw moment at `t = 1`, centered moments for `t ≥ 2`.
    #[default]
    RawThenCentered,
    /// Raw moments for every `t`.
    RawOnly,
}

/// What `A_t` was divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// The magnitude of the compared Haar moment.
    Reference,
    /// `σ_Haar^t`, used when the compared Haar moment vanishes.
    Standardized,
    /// No usable scale.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiRandomnessRow {
    pub t: u32,
    pub a_t: f64,
    pub ensemble: f64,
    pub reference: f64,
    pub normalized: Option<f64>,
    pub normalization: Normalization,
    /// Standard error of the quantity the zero test is applied to: the
    /// normalized `A_t` when it is defined, the raw one otherwise.
    pub std_error: f64,
    pub zero_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntiRandomnessReport {
    pub epsilon: f64,
    pub comparison: Comparison,
    pub rows: Vec<AntiRandomnessRow>,
}

/// `|A| ≤ max(ε, 3·se)`.
pub fn zero_consistent(value: f64, std_error: f64, epsilon: f64) -> bool {
    value.abs() <= epsilon.max(3.0 * std_error)
}

/// Reference moments below this fraction of `max |λ − c|^t` (with `c` the
/// centering) are rounding noise and count as vanishing.
const VANISHING_REFERENCE: f64 = 1e-14;

/// Anti-randomness of an ensemble against the Haar reference of `spec`.
pub fn anti_randomness(
    ensemble: &[MomentEstimate],
    spec: &Spectrum,
    a: f64,
    epsilon: f64,
    comparison: Comparison,
) -> Result<AntiRandomnessReport> {
    let t_max = ensemble.iter().map(|e| e.t).max().unwrap_or(0);
    let sigma = haar_variance(spec, a).sqrt();
    let mut rows = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        let kind = match comparison {
            Comparison::RawThenCentered if t >= 2 => MomentKind::Centered,
            _ => MomentKind::Raw,
        };
        let est = ensemble
            .iter()
            .find(|e| e.t == t && e.kind == kind)
            .ok_or_else(|| Error::invalid(MODULE, format!("missing {} estimate for t = {t}", kind.as_str())))?;
        let reference = match kind {
            MomentKind::Raw => haar_raw_moment(spec, t, a)?,
            MomentKind::Centered => haar_centered_moment(spec, t, a)?,
        };
        let a_t = (est.value - reference).abs();
        let scale_ref = reference.abs();
        let scale_std = sigma.powi(t as i32);
        let center = if kind == MomentKind::Centered {
            haar_mean(spec, a)
        } else {
            0.0
        };
        let spread = spec
            .entries()
            .iter()
            .map(|&(l, _)| (l - center).abs())
            .fold(0.0, f64::max);
        let (normalization, scale) = if scale_ref > VANISHING_REFERENCE * spread.powi(t as i32) && scale_ref > 0.0 {
            (Normalization::Reference, scale_ref)
        } else if scale_std > 0.0 {
            (Normalization::Standardized, scale_std)
        } else {
            (Normalization::Undefined, 0.0)
        };
        let (normalized, std_error, tested) = if scale > 0.0 {
            (Some(a_t / scale), est.std_error / scale, a_t / scale)
        } else {
            (None, est.std_error, a_t)
        };
        rows.push(AntiRandomnessRow {
            t,
            a_t,
            ensemble: est.value,
            reference,
            normalized,
            normalization,
            std_error,
            zero_consistent: zero_consistent(tested, std_error, epsilon),
        });
    }
    Ok(AntiRandomnessReport {
        epsilon,
        comparison,
        rows,
    })
}

pub fn write_anti_randomness_csv<W: Write>(report: &AntiRandomnessReport, w: W) -> Result<()> {
    let mut t = Table::new(&["t", "A_t", "A_t_normalized", "std_error", "zero_consistent"]);
    for r in &report.rows {
        t.push(vec![
            r.t.to_string(),
            fmt_f64(r.a_t),
            r.normalized.map(fmt_f64).unwrap_or_else(|| "undefined".into()),
            fmt_f64(r.std_error),
            fmt_bool(r.zero_consistent),
        ]);
    }
    t.write(w)
}

/// Upper bound on an ensemble's variance from its Haar variance and `A_2`.
pub fn loss_variance_bound(spec: &Spectrum, a: f64, a2: f64) -> Result<f64> {
    if !(a2 >= 0.0) {
        return Err(Error::invalid(MODULE, format!("A_2 must be non-negative, got {a2}")));
    }
    Ok(haar_centered_moment(spec, 2, a)? + a2)
}

/// `1 / (2^{n−1} + 1)`.
pub fn projector_haar_variance_bound(n_qubits: u32) -> f64 {
    1.0 / (2f64.powi(n_qubits as i32 - 1) + 1.0)
}

/// Concentration matching a state-sampling convention.
pub fn concentration(convention: HaarConvention) -> f64 {
    convention.concentration()
}
