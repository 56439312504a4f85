//! The class margin and bounds on the probability of misclassifying a random
//! data point from a finite number of measurement shots.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::stats::{fit_line, sample_variance, LineFit};
use crate::{par, Error, RandomStream, Result};

const MODULE: &str = "margin";

/// Threshold `b`, copy budget `M` and confidence `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSpec {
    pub b: f64,
    pub copies: u64,
    pub delta: f64,
}

impl MarginSpec {
    pub fn new(b: f64, copies: u64, delta: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid(
                MODULE,
                format!("threshold b must lie in (0,1), got {b}"),
            ));
        }
        if copies == 0 {
            return Err(Error::invalid(MODULE, "copy count must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(MODULE, format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(MarginSpec { b, copies, delta })
    }

    /// Hoeffding resolution window `√(ln(2/δ) / 2M)`.
    pub fn window(&self) -> f64 {
        ((2.0 / self.delta).ln() / (2.0 * self.copies as f64)).sqrt()
    }
}

/// `b − w`; margins at or above it cannot be resolved with `M` copies.
/// A non-positive value means no margin is resolvable.
pub fn resolvable_threshold(spec: &MarginSpec) -> f64 {
    spec.b - spec.window()
}

/// Label-aware rescaling of an expectation value `o` so that `z < b` exactly
/// when `o` lies strictly on the side of `b` belonging to class `y`.
pub fn class_margin(o: f64, y: u8, b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(
            MODULE,
            format!("threshold b must lie in (0,1), got {b}"),
        ));
    }
    if !(0.0..=1.0).contains(&o) {
        return Err(Error::invalid(MODULE, format!("expectation {o} outside [0,1]")));
    }
    let z = match y {
        0 => o,
        1 if o < b => 1.0 - (1.0 - b) / b * o,
        1 => b / (1.0 - b) * (1.0 - o),
        _ => return Err(Error::invalid(MODULE, format!("label must be 0 or 1, got {y}"))),
    };
    Ok(z.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub id: u64,
    pub y: u8,
    pub o: f64,
    pub z: f64,
}

impl MarginSample {
    pub fn new(id: u64, y: u8, o: f64, b: f64) -> Result<Self> {
        Ok(MarginSample {
            id,
            y,
            o,
            z: class_margin(o, y, b)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Incorrect,
    Unresolved,
}

impl Outcome {
    /// Incorrect and unresolved outcomes both count as failures.
    pub fn is_failure(self) -> bool {
        self != Outcome::Correct
    }
}

fn classify_count(k: u64, spec: &MarginSpec) -> Outcome {
    let freq = k as f64 / spec.copies as f64;
    let w = spec.window();
    if freq <= spec.b - w {
        Outcome::Correct
    } else if freq >= spec.b + w {
        Outcome::Incorrect
    } else {
        Outcome::Unresolved
    }
}

fn draw_outcome<R: Rng>(z: f64, spec: &MarginSpec, rng: &mut R) -> Outcome {
    let k = Binomial::new(spec.copies, z).expect("z validated").sample(rng);
    classify_count(k, spec)
}

/// Measures `M` copies of a state whose margin is `z`.
pub fn simulate_classification(z: f64, spec: &MarginSpec, stream: RandomStream) -> Result<Outcome> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::invalid(MODULE, format!("margin {z} outside [0,1]")));
    }
    Ok(draw_outcome(z, spec, &mut stream.rng()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Chebyshev,
    Bernstein,
    Subgaussian,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Chebyshev => "chebyshev",
            BoundKind::Bernstein => "bernstein",
            BoundKind::Subgaussian => "subgaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureBoundReport {
    pub kind: BoundKind,
    pub mu1: f64,
    pub sigma2: f64,
    /// Moment-growth constant; absent for Chebyshev.
    pub l: Option<f64>,
    pub spec: MarginSpec,
    pub k_gap: f64,
    pub bound: f64,
    pub vacuous: bool,
}

/// `b − w − μ_1`.
pub fn k_gap(mu1: f64, spec: &MarginSpec) -> f64 {
    resolvable_threshold(spec) - mu1
}

fn report(
    kind: BoundKind,
    mu1: f64,
    sigma2: f64,
    l: Option<f64>,
    spec: &MarginSpec,
    f: impl Fn(f64) -> f64,
) -> FailureBoundReport {
    let k = k_gap(mu1, spec);
    let (bound, vacuous) = if k <= 0.0 {
        (1.0, true)
    } else {
        let v = f(k);
        (if v.is_nan() { 1.0 } else { v.clamp(0.0, 1.0) }, false)
    };
    FailureBoundReport {
        kind,
        mu1,
        sigma2,
        l,
        spec: *spec,
        k_gap: k,
        bound,
        vacuous,
    }
}

/// `σ² / k²`.
pub fn chebyshev_failure_bound(mu1: f64, sigma2: f64, spec: &MarginSpec) -> Result<FailureBoundReport> {
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid(
            MODULE,
            format!("variance must be non-negative, got {sigma2}"),
        ));
    }
    Ok(report(BoundKind::Chebyshev, mu1, sigma2, None, spec, |k| {
        sigma2 / (k * k)
    }))
}

/// `exp(−k² / (2(σ² + L k)))`.
pub fn bernstein_bound(mu1: f64, sigma2: f64, l: f64, spec: &MarginSpec) -> Result<FailureBoundReport> {
    if !(sigma2 >= 0.0 && l >= 0.0) {
        return Err(Error::invalid(MODULE, "variance and L must be non-negative"));
    }
    Ok(report(BoundKind::Bernstein, mu1, sigma2, Some(l), spec, |k| {
        let den = 2.0 * (sigma2 + l * k);
        if den == 0.0 {
            0.0
        } else {
            (-k * k / den).exp()
        }
    }))
}

/// `exp(−k² / (3L²))`. `L = 0` describes a point mass and gives 0.
pub fn subgaussian_bound(mu1: f64, l: f64, spec: &MarginSpec) -> Result<FailureBoundReport> {
    if !(l >= 0.0) {
        return Err(Error::invalid(MODULE, format!("L must be non-negative, got {l}")));
    }
    Ok(report(BoundKind::Subgaussian, mu1, f64::NAN, Some(l), spec, |k| {
        if l == 0.0 {
            0.0
        } else {
            (-k * k / (3.0 * l * l)).exp()
        }
    }))
}

/// Smallest `L` with `|μ̄_t|^{1/t} ≤ σ² (L/e) t` for `t = 2..=t_max`.
///
/// `centered[i]` is the centered moment of order `i + 1`.
pub fn bernstein_condition(centered: &[f64], sigma2: f64, t_max: usize) -> Result<f64> {
    check_centered(centered, t_max)?;
    let mut l: f64 = 0.0;
    for t in 2..=t_max {
        let root = centered[t - 1].abs().powf(1.0 / t as f64);
        if root == 0.0 {
            continue;
        }
        l = l.max(std::f64::consts::E * root / (sigma2 * t as f64));
    }
    Ok(l)
}

/// Smallest `L` with `|μ̄_t|^{1/t} ≤ (L/√(2e)) √t` for `t = 2..=t_max`.
pub fn subgaussian_condition(centered: &[f64], t_max: usize) -> Result<f64> {
    check_centered(centered, t_max)?;
    let c = (2.0 * std::f64::consts::E).sqrt();
    let mut l: f64 = 0.0;
    for t in 2..=t_max {
        let root = centered[t - 1].abs().powf(1.0 / t as f64);
        l = l.max(c * root / (t as f64).sqrt());
    }
    Ok(l)
}

fn check_centered(centered: &[f64], t_max: usize) -> Result<()> {
    if centered.len() < t_max {
        return Err(Error::invalid(
            MODULE,
            format!("{} centered moments given, t_max is {t_max}", centered.len()),
        ));
    }
    for t in (2..=t_max).step_by(2) {
        if centered[t - 1] < -1e-12 {
            return Err(Error::invalid(
                MODULE,
                format!("even centered moment of order {t} is negative"),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopiesMode {
    /// Direct inversion of the Chebyshev failure bound.
    #[default]
    Derived,
    /// The squared-logarithm, `σ/k` variant.
    Verbatim,
}

/// Smallest `M` for which a misclassified fraction of at most `k_fraction`
/// is guaranteed at confidence `1 − δ`.
pub fn required_copies(mu1: f64, sigma: f64, b: f64, k_fraction: f64, delta: f64, mode: CopiesMode) -> Result<u64> {
    if !(k_fraction > 0.0 && k_fraction < 1.0) {
        return Err(Error::invalid(MODULE, format!("k must lie in (0,1), got {k_fraction}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(MODULE, format!("delta must lie in (0,1), got {delta}")));
    }
    if b <= mu1 {
        return Err(Error::Infeasible {
            module: MODULE,
            msg: format!("threshold {b} does not exceed the mean margin {mu1}"),
        });
    }
    let log = (2.0 / delta).ln();
    let (gap, num) = match mode {
        CopiesMode::Derived => (b - mu1 - sigma / k_fraction.sqrt(), log),
        CopiesMode::Verbatim => (b - mu1 - sigma / k_fraction, log * log),
    };
    // Gaps at rounding level are treated as closed.
    if gap <= 1e-12 {
        return Err(Error::Infeasible {
            module: MODULE,
            msg: format!("gap b − μ1 − σ·k-term is {gap}"),
        });
    }
    let m = num / (2.0 * gap * gap);
    // Absorb rounding in m so exact integers are not bumped up by one.
    Ok(((m * (1.0 - 1e-12)).ceil() as u64).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    Polynomial,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `log y` against `log n`.
    pub power: LineFit,
    /// `log y` against `n`.
    pub exponential: LineFit,
    pub class: Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub gap: DecayFit,
    pub variance: DecayFit,
}

fn fit_decay(n: &[f64], y: &[f64]) -> DecayFit {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let ln_n: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let power = fit_line(&ln_n, &ly);
    let exponential = fit_line(n, &ly);
    let (lo, hi) = n
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // The exponential reading needs the better fit and a real decay
    // (more than a factor 2 over the range).
    let decays = exponential.slope * (hi - lo) < -std::f64::consts::LN_2;
    let class = if exponential.ssr < power.ssr && decays {
        Decay::Exponential
    } else {
        Decay::Polynomial
    };
    DecayFit {
        power,
        exponential,
        class,
    }
}

/// Fits the decay of `b − μ_1` and of `σ²` over a series of `(n, μ_1, σ²)`.
pub fn efficiency_diagnostics(series: &[(f64, f64, f64)], b: f64) -> Result<ScalingReport> {
    let mut ns: Vec<f64> = series.iter().map(|s| s.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::invalid(MODULE, "need at least three distinct n"));
    }
    if series.iter().any(|s| b - s.1 <= 0.0 || s.2 <= 0.0 || s.0 <= 0.0) {
        return Err(Error::invalid(
            MODULE,
            "gaps, variances and n must be positive to fit on a log scale",
        ));
    }
    let n: Vec<f64> = series.iter().map(|s| s.0).collect();
    let gap: Vec<f64> = series.iter().map(|s| b - s.1).collect();
    let var: Vec<f64> = series.iter().map(|s| s.2).collect();
    Ok(ScalingReport {
        gap: fit_decay(&n, &gap),
        variance: fit_decay(&n, &var),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFailure {
    /// Fraction of samples with `z ≥ b − w`.
    pub indicator_rate: f64,
    pub indicator_std_error: f64,
    /// Fraction of simulated shot-level classifications that failed.
    pub shot_rate: f64,
    pub shot_std_error: f64,
    pub n_samples: usize,
    pub trials_per_sample: usize,
}

/// Failure rate of a sample set, estimated from the resolvability indicator
/// and from `trials` simulated measurements per sample.
pub fn empirical_failure(
    samples: &[MarginSample],
    spec: &MarginSpec,
    trials: usize,
    stream: RandomStream,
) -> Result<EmpiricalFailure> {
    if samples.is_empty() {
        return Err(Error::invalid(MODULE, "no samples"));
    }
    if let Some(s) = samples.iter().find(|s| !(0.0..=1.0).contains(&s.z)) {
        return Err(Error::invalid(
            MODULE,
            format!("sample {} has margin {} outside [0,1]", s.id, s.z),
        ));
    }
    let n = samples.len() as f64;
    let threshold = resolvable_threshold(spec);
    let ind: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.z >= threshold))).collect();
    let indicator_rate = ind.iter().sum::<f64>() / n;
    let indicator_std_error = (sample_variance(&ind) / n).sqrt();

    let (shot_rate, shot_std_error) = if trials == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let per_sample = par::map_range(samples.len(), |i| {
            let mut rng = stream.substream(i as u64).rng();
            let fails = (0..trials)
                .filter(|_| draw_outcome(samples[i].z, spec, &mut rng).is_failure())
                .count();
            fails as f64 / trials as f64
        });
        (
            per_sample.iter().sum::<f64>() / n,
            (sample_variance(&per_sample) / n).sqrt(),
        )
    };
    Ok(EmpiricalFailure {
        indicator_rate,
        indicator_std_error,
        shot_rate,
        shot_std_error,
        n_samples: samples.len(),
        trials_per_sample: trials,
    })
}

pub fn write_samples_csv<W: Write>(samples: &[MarginSample], w: W) -> Result<()> {
    let mut t = Table::new(&["id", "y", "o", "z"]);
    for s in samples {
        t.push(vec![s.id.to_string(), s.y.to_string(), fmt_f64(s.o), fmt_f64(s.z)]);
    }
    t.write(w)
}

pub fn write_bounds_csv<W: Write>(reports: &[FailureBoundReport], w: W) -> Result<()> {
    let mut t = Table::new(&[
        "bound_kind",
        "mu1",
        "sigma2",
        "L",
        "b",
        "M",
        "delta",
        "k_gap",
        "bound",
        "vacuous",
    ]);
    for r in reports {
        t.push(vec![
            r.kind.as_str().into(),
            fmt_f64(r.mu1),
            if r.sigma2.is_nan() {
                String::new()
            } else {
                fmt_f64(r.sigma2)
            },
            r.l.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.spec.b),
            r.spec.copies.to_string(),
            fmt_f64(r.spec.delta),
            fmt_f64(r.k_gap),
            fmt_f64(r.bound),
            fmt_bool(r.vacuous),
        ]);
    }
    t.write(w)
}

pub fn write_failure_csv<W: Write>(f: &EmpiricalFailure, w: W) -> Result<()> {
    let mut t = Table::new(&["estimator", "rate", "std_error", "n_samples", "trials_per_sample"]);
    for (name, rate, se) in [
        ("indicator", f.indicator_rate, f.indicator_std_error),
        ("shots", f.shot_rate, f.shot_std_error),
    ] {
        t.push(vec![
            name.into(),
            fmt_f64(rate),
            fmt_f64(se),
            f.n_samples.to_string(),
            f.trials_per_sample.to_string(),
        ]);
    }
    t.write(w)
}
