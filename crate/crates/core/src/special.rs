//! Gamma-function ratios in log space and compensated summation.
//!
//! Dirichlet moments only ever need `Γ(a + k/2) / Γ(a)` for small integer
//! `k`. Integer steps are log rising factorials; the half step uses an
//! asymptotic series for `ln Γ(x + 1/2) − ln Γ(x)` with upward recurrence for
//! small `x`. Neither route differences two large `ln Γ` values, so the
//! results keep full relative precision even for `a ≈ 2^48`.

/// `ln Γ(a + k) − ln Γ(a) = Σ_{j<k} ln(a + j)`.
pub fn ln_rising(a: f64, k: u32) -> f64 {
    (0..k).map(|j| (a + f64::from(j)).ln()).sum()
}

const HALF_RATIO_SERIES_MIN: f64 = 12.0;

/// `ln Γ(x + 1/2) − ln Γ(x)` for `x > 0`.
pub fn ln_gamma_half_ratio(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma_half_ratio needs x > 0, got {x}");
    if x >= HALF_RATIO_SERIES_MIN {
        return 0.5 * x.ln() + half_ratio_correction(x);
    }
    // Γ(x+½)/Γ(x) = Γ(x+N+½)/Γ(x+N) · Π_{j<N} (x+j)/(x+j+½)
    let steps = (HALF_RATIO_SERIES_MIN - x).ceil() as u32;
    let shifted = x + f64::from(steps);
    let mut acc = 0.5 * shifted.ln() + half_ratio_correction(shifted);
    for j in 0..steps {
        let xj = x + f64::from(j);
        acc += (xj / (xj + 0.5)).ln();
    }
    acc
}

/// Asymptotic tail of `ln Γ(x+½) − ln Γ(x) − ½ ln x`.
fn half_ratio_correction(x: f64) -> f64 {
    let u = 1.0 / x;
    let u2 = u * u;
    // -1/8 u + 1/192 u^3 - 1/640 u^5 + 17/14336 u^7 - 31/18432 u^9 + 691/180224 u^11
    let coeffs = [
        -1.0 / 8.0,
        1.0 / 192.0,
        -1.0 / 640.0,
        17.0 / 14336.0,
        -31.0 / 18432.0,
        691.0 / 180224.0,
    ];
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * u2 + c;
    }
    acc * u
}

/// `ln Γ(a + h/2) − ln Γ(a)` for a non-negative number of half steps `h`.
pub fn ln_gamma_ratio_half_steps(a: f64, half_steps: u32) -> f64 {
    if half_steps.is_multiple_of(2) {
        ln_rising(a, half_steps / 2)
    } else {
        ln_gamma_half_ratio(a) + ln_rising(a + 0.5, half_steps / 2)
    }
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    match binomial_exact(n, k) {
        Some(v) => v as f64,
        None => ln_binomial(n, k).exp(),
    }
}

pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Neumaier-compensated accumulator that also tracks the largest term seen,
/// so callers can report how much cancellation a signed sum went through.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    max_term: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.max_term = self.max_term.max(x.abs());
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn max_term(&self) -> f64 {
        self.max_term
    }

    /// `max |term| / |result|`; 1 means no cancellation, infinity means the
    /// terms cancelled exactly.
    pub fn cancellation(&self) -> f64 {
        let v = self.value().abs();
        if self.max_term == 0.0 {
            1.0
        } else if v == 0.0 {
            f64::INFINITY
        } else {
            self.max_term / v
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}
