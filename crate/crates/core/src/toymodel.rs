//! Dirichlet toy ensemble.
//!
//! A sample is a bit `c` and a probability vector `x` of length `n + 1`; its
//! state puts weight `x_q` on `|0^q 1^{n−q}⟩` with sign `(−1)^{c(n−q)}`. The
//! weights are `Dirichlet(α)` with `α_q = C(n, q)/2`, half the multiplicity
//! of the Hamming-weight eigenvalue `(n − q)/n` of `Ô_Z`.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::margin::{chebyshev_failure_bound, class_margin, FailureBoundReport, MarginSpec};
use crate::moments::{anti_randomness, Comparison, MomentEstimate, MomentKind, Normalization, Spectrum};
use crate::simcore::{
    apply_circuit, random_transpositions, Gate, Observable, Pauli, PauliString, StateVector, MAX_QUBITS,
};
use crate::special::{
    binomial, binomial_exact, ln_gamma_half_ratio, ln_gamma_ratio_half_steps, ln_rising, CompensatedSum,
};
use crate::stats::{bootstrap, centered_moments, raw_moments, replicate_std};
use crate::{par, Error, RandomStream, Result};

const MODULE: &str = "toymodel";

/// Largest odd `n` the closed forms accept.
pub const MAX_CLOSED_FORM_N: u32 = 49;

/// One `Gamma(α_i, 1)` per component, normalized.
pub fn dirichlet_sample(alphas: &[f64], stream: RandomStream) -> Result<Vec<f64>> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::invalid(MODULE, "Dirichlet parameters must be positive"));
    }
    let mut rng = stream.rng();
    Ok(draw_dirichlet(alphas, &mut rng))
}

fn draw_dirichlet<R: Rng>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = alphas
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let s: f64 = g.iter().sum();
        // All-zero draws only happen through underflow for tiny shapes.
        if s > 0.0 {
            for v in &mut g {
                *v /= s;
            }
            return g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub n: u32,
    pub alphas: Vec<f64>,
}

impl ToyParams {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n as usize > MAX_QUBITS {
            return Err(Error::invalid(
                MODULE,
                format!("n must lie in 1..={MAX_QUBITS}, got {n}"),
            ));
        }
        Ok(ToyParams {
            n,
            alphas: (0..=n).map(|k| 0.5 * binomial(u64::from(n), u64::from(k))).collect(),
        })
    }

    pub fn alpha0(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn sample(&self, stream: RandomStream) -> ToySample {
        let mut rng = stream.rng();
        let c = u8::from(rng.random::<bool>());
        ToySample {
            c,
            x: draw_dirichlet(&self.alphas, &mut rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySample {
    pub c: u8,
    pub x: Vec<f64>,
}

/// Basis index of `|0^q 1^{n−q}⟩`.
pub fn support_index(n: u32, q: u32) -> usize {
    (1usize << (n - q)) - 1
}

pub fn toy_state(sample: &ToySample, n: u32) -> Result<StateVector> {
    if sample.x.len() != n as usize + 1 {
        return Err(Error::invalid(
            MODULE,
            format!("weight vector of length {} for n = {n}", sample.x.len()),
        ));
    }
    if sample.x.iter().any(|&v| v < 0.0) || (sample.x.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(MODULE, "weights must be a probability vector"));
    }
    let nq = n as usize;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << nq];
    for (q, &w) in sample.x.iter().enumerate() {
        amps[support_index(n, q as u32)] = Complex64::new(w.sqrt(), 0.0);
    }
    let state = StateVector::normalized(nq, amps)?;
    if sample.c == 0 {
        return Ok(state);
    }
    // Z on every qubit: phase (−1)^{popcount}.
    let phases = (0..1usize << nq)
        .map(|i| std::f64::consts::PI * f64::from(i.count_ones() % 2))
        .collect();
    apply_circuit(&state, &[Gate::DiagonalPhase(phases)])
}

/// Normalized Hamming weight.
pub fn oz_observable(n: u32) -> Observable {
    Observable::Diagonal(
        (0..1u32 << n)
            .map(|i| f64::from(i.count_ones()) / f64::from(n))
            .collect(),
    )
}

/// `(I − X)/2` on qubit `⌊n/2⌋` (counting from 0).
pub fn ox_observable(n: u32) -> Result<Observable> {
    if n < 2 {
        return Err(Error::invalid(MODULE, "Ô_X needs at least two qubits"));
    }
    Ok(Observable::PauliSum {
        n_qubits: n as usize,
        terms: vec![
            PauliString::identity(0.5),
            PauliString::single(-0.5, n as usize / 2, Pauli::X),
        ],
    })
}

pub fn oz_spectrum(n: u32) -> Spectrum {
    Spectrum::new(
        (0..=n)
            .map(|k| {
                (
                    f64::from(k) / f64::from(n),
                    binomial_exact(u64::from(n), u64::from(k)).expect("small n") as u64,
                )
            })
            .collect(),
    )
    .expect("valid spectrum")
}

/// `1/2 − √(x_{⌊n/2⌋} x_{⌊n/2⌋+1})`.
pub fn toy_margin_closed(x: &[f64], n: u32) -> Result<f64> {
    let m = n as usize / 2;
    if x.len() != n as usize + 1 {
        return Err(Error::invalid(
            MODULE,
            format!("weight vector of length {} for n = {n}", x.len()),
        ));
    }
    Ok(0.5 - (x[m] * x[m + 1]).sqrt())
}

/// Margin through the statevector: `⟨Ô_X⟩` with the sample's bit as label.
pub fn toy_margin_statevector(sample: &ToySample, n: u32) -> Result<f64> {
    let o = ox_observable(n)?.expectation(&toy_state(sample, n)?)?;
    class_margin(o.clamp(0.0, 1.0), sample.c, 0.5)
}

fn check_odd(n: u32) -> Result<()> {
    if n.is_multiple_of(2) || !(3..=MAX_CLOSED_FORM_N).contains(&n) {
        return Err(Error::invalid(
            MODULE,
            format!("closed forms need odd n in 3..={MAX_CLOSED_FORM_N}, got {n}"),
        ));
    }
    Ok(())
}

/// `(α, α_0)` for the two middle weights: `α = C(n, ⌊n/2⌋)/2`, `α_0 = 2^{n−1}`.
fn middle_alpha(n: u32) -> (f64, f64) {
    (0.5 * binomial(u64::from(n), u64::from(n / 2)), 2f64.powi(n as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactMoment {
    pub value: f64,
    /// `max |term| / |value|` of the alternating sum.
    pub cancellation: f64,
}

/// `E[z^t]` for the margin `z = 1/2 − √(x_m x_{m+1})`.
///
/// Expands the binomial and uses
/// `E[(x_m x_{m+1})^{j/2}] = (Γ(α + j/2)/Γ(α))² Γ(α_0)/Γ(α_0 + j)`.
pub fn toy_moment_exact(t: u32, n: u32) -> Result<ExactMoment> {
    check_odd(n)?;
    if t == 0 {
        return Err(Error::invalid(MODULE, "moment order must be at least 1"));
    }
    let (a, a0) = middle_alpha(n);
    let mut s = CompensatedSum::new();
    for j in 0..=t {
        let ln_c = (binomial_exact(u64::from(t), u64::from(j)).expect("small t") as f64).ln();
        let ln_term =
            ln_c - f64::from(t - j) * std::f64::consts::LN_2 + 2.0 * ln_gamma_ratio_half_steps(a, j) - ln_rising(a0, j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s.add(sign * ln_term.exp());
    }
    Ok(ExactMoment {
        value: s.value(),
        cancellation: s.cancellation(),
    })
}

/// `1/2 − (Γ(α + 1/2)/Γ(α))² / 2^{n−1}`.
pub fn toy_mean_exact(n: u32) -> Result<f64> {
    check_odd(n)?;
    let (a, a0) = middle_alpha(n);
    Ok(0.5 - (2.0 * ln_gamma_half_ratio(a)).exp() / a0)
}

/// `1/2 − E[z]` without the subtraction, for the small-gap bounds.
pub fn toy_gap_exact(n: u32) -> Result<f64> {
    check_odd(n)?;
    let (a, a0) = middle_alpha(n);
    Ok((2.0 * ln_gamma_half_ratio(a)).exp() / a0)
}

/// `E[x_m x_{m+1}] − E[√(x_m x_{m+1})]²`, evaluated as
/// `(α/α_0)² [α_0/(α_0+1) − ρ²]` with `ρ = (Γ(α+½)/Γ(α))²/α`, so the
/// near-cancellation `1 − ρ²` goes through `expm1`.
pub fn toy_variance_exact(n: u32) -> Result<f64> {
    check_odd(n)?;
    let (a, a0) = middle_alpha(n);
    let ln_rho = 2.0 * ln_gamma_half_ratio(a) - a.ln();
    Ok((a / a0).powi(2) * (-1.0 / (a0 + 1.0) - (2.0 * ln_rho).exp_m1()))
}

/// `C²/(2^n (C+1))` and `C/2^n` with `C = C(n, ⌊n/2⌋)`.
pub fn gautschi_bounds(n: u32) -> (f64, f64) {
    let c = binomial(u64::from(n), u64::from(n / 2));
    let d = 2f64.powi(n as i32);
    (c * c / (d * (c + 1.0)), c / d)
}

/// `2 / (π (2^{n−1} + 1))`.
pub fn toy_variance_bound(n: u32) -> f64 {
    2.0 / (std::f64::consts::PI * (2f64.powi(n as i32 - 1) + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyFailureBound {
    /// `(2^{−n}/2π)(√(8/(πn)) − w)^{−2}`, clamped to `[0, 1]`.
    pub bound: f64,
    pub vacuous: bool,
    /// Chebyshev bound from the exact mean and variance.
    pub chebyshev: FailureBoundReport,
}

pub fn toy_failure_bound(n: u32, spec: &MarginSpec) -> Result<ToyFailureBound> {
    let gap = (8.0 / (std::f64::consts::PI * f64::from(n))).sqrt() - spec.window();
    let (bound, vacuous) = if gap <= 0.0 {
        (1.0, true)
    } else {
        (
            (2f64.powi(-(n as i32)) / (2.0 * std::f64::consts::PI) / (gap * gap)).min(1.0),
            false,
        )
    };
    let chebyshev = chebyshev_failure_bound(toy_mean_exact(n)?, toy_variance_exact(n)?, spec)?;
    Ok(ToyFailureBound {
        bound,
        vacuous,
        chebyshev,
    })
}

/// Closed-form margins of `samples` independent draws; draw `i` uses
/// substream `i`.
pub fn sample_margins(params: &ToyParams, samples: usize, stream: RandomStream) -> Result<Vec<f64>> {
    let n = params.n;
    par::map_range(samples, |i| {
        toy_margin_closed(&params.sample(stream.substream(i as u64)).x, n)
    })
    .into_iter()
    .collect()
}

/// `⟨Ô_Z⟩` on `samples` independent draws.
pub fn sample_oz_values(params: &ToyParams, samples: usize, stream: RandomStream) -> Vec<f64> {
    let lambdas = oz_on_support(params.n);
    par::map_range(samples, |i| {
        let s = params.sample(stream.substream(i as u64));
        s.x.iter().zip(&lambdas).map(|(x, l)| x * l).sum()
    })
}

/// `Ô_Z` eigenvalue on each support state `|0^q 1^{n−q}⟩`.
fn oz_on_support(n: u32) -> Vec<f64> {
    (0..=n).map(|q| f64::from(n - q) / f64::from(n)).collect()
}

/// `Σ α_q λ_q / α_0`, the mean of `⟨Ô_Z⟩` over the ensemble.
pub fn oz_mean_exact(params: &ToyParams) -> f64 {
    let mut s = CompensatedSum::new();
    let a0 = params.alpha0();
    for (a, l) in params.alphas.iter().zip(oz_on_support(params.n)) {
        s.add(a / a0 * l);
    }
    s.value()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowConfig {
    pub n: u32,
    pub t_max: u32,
    pub perm_counts: Vec<usize>,
    /// Number of independently permuted observables per transposition count.
    pub perm_samples: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub bootstrap: usize,
}

impl ShadowConfig {
    pub fn new(n: u32) -> Self {
        ShadowConfig {
            n,
            t_max: 6,
            perm_counts: vec![0, 1, 5, 15],
            perm_samples: 2 * n as usize,
            samples: 20_000,
            epsilon: 0.07,
            bootstrap: crate::moments::DEFAULT_BOOTSTRAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowRow {
    pub t: u32,
    pub perm_count: usize,
    pub a_t: f64,
    pub a_t_normalized: Option<f64>,
    pub normalization: Normalization,
    pub std_error: f64,
    pub zero_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowTable {
    pub config: ShadowConfig,
    pub rows: Vec<ShadowRow>,
    /// Transpositions applied to each observable, keyed by transposition
    /// count and observable index.
    pub permutations: Vec<(usize, usize, Vec<(usize, usize)>)>,
}

impl ShadowTable {
    /// Whether some order is not zero-consistent for transposition count `k`.
    pub fn deviates(&self, k: usize) -> bool {
        self.rows.iter().any(|r| r.perm_count == k && !r.zero_consistent)
    }
}

/// Anti-randomness of the toy ensemble through permuted copies of `Ô_Z`.
///
/// For each transposition count `k`, `perm_samples` observables `Π Ô_Z Π†`
/// are drawn and every state is evaluated under all of them; the moments of
/// the pooled values are compared against the Haar reference of `Ô_Z`.
/// Bootstrap errors resample states, keeping the drawn permutations fixed.
pub fn shadow_design_experiment(cfg: &ShadowConfig, stream: RandomStream) -> Result<ShadowTable> {
    if cfg.samples < 2 || cfg.perm_samples == 0 || cfg.t_max == 0 {
        return Err(Error::invalid(
            MODULE,
            "need ≥ 2 samples, ≥ 1 permuted observable and t_max ≥ 1",
        ));
    }
    let params = ToyParams::new(cfg.n)?;
    let n = cfg.n;
    let dim = 1usize << n;
    let spectrum = oz_spectrum(n);
    let diag: Vec<f64> = (0..dim).map(|i| f64::from(i.count_ones()) / f64::from(n)).collect();
    let support: Vec<usize> = (0..=n).map(|q| support_index(n, q)).collect();
    let weights: Vec<Vec<f64>> = par::map_range(cfg.samples, |i| {
        params.sample(stream.named("states").substream(i as u64)).x
    });
    let tm = cfg.t_max as usize;

    let mut rows = Vec::new();
    let mut permutations = Vec::new();
    for &k in &cfg.perm_counts {
        let perm_stream = stream.named("permutations").child(k as u64);
        // Eigenvalue seen by each support state under each observable.
        let lambdas: Vec<Vec<f64>> = (0..cfg.perm_samples)
            .map(|j| {
                let swaps = random_transpositions(dim, k, perm_stream.substream(j as u64));
                let mut perm: Vec<usize> = (0..dim).collect();
                for &(a, b) in &swaps {
                    perm.swap(a, b);
                }
                permutations.push((k, j, swaps));
                support.iter().map(|&idx| diag[perm[idx]]).collect()
            })
            .collect();
        let values: Vec<Vec<f64>> = par::map_slice(&weights, |x| {
            lambdas
                .iter()
                .map(|l| x.iter().zip(l).map(|(a, b)| a * b).sum())
                .collect()
        });
        let stat = |idx: &[usize]| {
            let pooled: Vec<f64> = idx.iter().flat_map(|&i| values[i].iter().copied()).collect();
            let mut out = raw_moments(&pooled, tm);
            out.extend(centered_moments(&pooled, tm));
            out
        };
        let all: Vec<usize> = (0..cfg.samples).collect();
        let point = stat(&all);
        let reps = bootstrap(
            cfg.samples,
            cfg.bootstrap,
            stream.named("bootstrap").child(k as u64),
            stat,
        );
        let se = replicate_std(&reps);
        let pooled_n = cfg.samples * cfg.perm_samples;
        let estimates: Vec<MomentEstimate> = (0..2 * tm)
            .map(|j| MomentEstimate {
                t: (j % tm) as u32 + 1,
                kind: if j < tm { MomentKind::Raw } else { MomentKind::Centered },
                value: point[j],
                std_error: se[j],
                n_samples: pooled_n,
            })
            .collect();
        let report = anti_randomness(&estimates, &spectrum, 0.5, cfg.epsilon, Comparison::RawThenCentered)?;
        rows.extend(report.rows.iter().map(|r| ShadowRow {
            t: r.t,
            perm_count: k,
            a_t: r.a_t,
            a_t_normalized: r.normalized,
            normalization: r.normalization,
            std_error: r.std_error,
            zero_consistent: r.zero_consistent,
        }));
    }
    Ok(ShadowTable {
        config: cfg.clone(),
        rows,
        permutations,
    })
}

pub fn write_shadow_csv<W: Write>(table: &ShadowTable, w: W) -> Result<()> {
    let mut t = Table::new(&["t", "perm_count", "A_t_normalized", "std_error", "zero_consistent"]);
    for r in &table.rows {
        t.push(vec![
            r.t.to_string(),
            r.perm_count.to_string(),
            r.a_t_normalized.map(fmt_f64).unwrap_or_else(|| "undefined".into()),
            fmt_f64(r.std_error),
            fmt_bool(r.zero_consistent),
        ]);
    }
    t.write(w)
}
