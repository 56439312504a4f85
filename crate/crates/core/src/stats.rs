//! Sample moments, bootstrap resampling and small least-squares fits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::RandomStream;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (`ddof = 1`); zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error_of_mean(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Raw moments `E[v^t]` for `t = 1..=t_max` (index 0 holds `t = 1`).
pub fn raw_moments(values: &[f64], t_max: usize) -> Vec<f64> {
    let mut acc = vec![0.0; t_max];
    for &v in values {
        let mut p = 1.0;
        for a in acc.iter_mut() {
            p *= v;
            *a += p;
        }
    }
    let n = values.len() as f64;
    acc.iter().map(|a| a / n).collect()
}

/// Population centered moments `E[(v − mean)^t]` for `t = 1..=t_max`.
pub fn centered_moments(values: &[f64], t_max: usize) -> Vec<f64> {
    let m = mean(values);
    let mut acc = vec![0.0; t_max];
    for &v in values {
        let d = v - m;
        let mut p = 1.0;
        for a in acc.iter_mut() {
            p *= d;
            *a += p;
        }
    }
    let n = values.len() as f64;
    let mut out: Vec<f64> = acc.iter().map(|a| a / n).collect();
    if let Some(first) = out.first_mut() {
        *first = 0.0;
    }
    out
}

/// Draws `resamples` bootstrap replicates of `statistic`.
///
/// `statistic` receives the resampled indices (with replacement, same length
/// as the data) and returns a fixed-length vector. Replicate `r` uses
/// substream `r` of `stream`, so the output does not depend on scheduling.
pub fn bootstrap<F>(n: usize, resamples: usize, stream: RandomStream, statistic: F) -> Vec<Vec<f64>>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync + Send,
{
    par::map_range(resamples, |r| {
        let mut rng = stream.substream(r as u64).rng();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        statistic(&idx)
    })
}

/// Componentwise standard deviation (`ddof = 1`) across replicates.
pub fn replicate_std(replicates: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = replicates.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|j| {
            let col: Vec<f64> = replicates.iter().map(|r| r[j]).collect();
            sample_variance(&col).sqrt()
        })
        .collect()
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    LineFit { intercept, slope, ssr }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sets() {
        let v = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(raw_moments(&v, 3), vec![0.5, 0.5, 0.5]);
        let c = centered_moments(&v, 4);
        assert_eq!(c, vec![0.0, 0.25, 0.0, 0.0625]);
        assert!((sample_variance(&v) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_of_constant_has_zero_spread() {
        let v = vec![0.3; 50];
        let reps = bootstrap(v.len(), 20, RandomStream::new(1), |idx| {
            vec![idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64]
        });
        assert!(replicate_std(&reps)[0] < 1e-15);
    }

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 5.0, 7.0];
        let f = fit_line(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.ssr < 1e-25);
    }
}
