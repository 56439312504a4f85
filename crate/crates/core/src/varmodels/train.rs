use serde::{Deserialize, Serialize};

use super::{Model, Prepared, MODULE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Adam step size.
    pub step: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 300,
            step: 0.05,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    /// Parameters with the lowest loss seen.
    pub model: Model,
    /// Loss before each update, then the loss after the last one.
    pub trace: Vec<f64>,
    pub best_iter: usize,
    pub best_loss: f64,
}

impl TrainResult {
    /// Best-so-far loss per iteration.
    pub fn best_trace(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|&l| {
                best = best.min(l);
                best
            })
            .collect()
    }
}

/// Fraction of points with margin below one half.
pub fn accuracy(model: &Model, data: &[Prepared]) -> f64 {
    let z = model.margins(data);
    z.iter().filter(|&&v| v < 0.5).count() as f64 / z.len().max(1) as f64
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Adam on the summed-margin loss with parameter-shift gradients, keeping
/// the best iterate.
pub fn train(model: &Model, data: &[Prepared], cfg: &TrainConfig) -> Result<TrainResult> {
    if data.is_empty() {
        return Err(Error::invalid(MODULE, "empty training split"));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::invalid(
            MODULE,
            format!("step must be positive, got {}", cfg.step),
        ));
    }
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_loss = model.loss(data);
    let mut best_iter = 0;
    let mut trace = vec![best_loss];
    let dim = model.theta.len();
    let (mut m, mut v) = (vec![0.0; dim], vec![0.0; dim]);
    for it in 1..=cfg.max_iters {
        let g = current.gradient(data);
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < cfg.tolerance {
            break;
        }
        let (b1t, b2t) = (1.0 - BETA1.powi(it as i32), 1.0 - BETA2.powi(it as i32));
        for j in 0..dim {
            m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j];
            v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j];
            current.theta[j] -= cfg.step * (m[j] / b1t) / ((v[j] / b2t).sqrt() + EPS);
        }
        let loss = current.loss(data);
        trace.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best = current.clone();
            best_iter = it;
        }
    }
    Ok(TrainResult {
        model: best,
        trace,
        best_iter,
        best_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Entangler, ModelKind, Point};
    use super::*;
    use crate::RandomStream;

    #[test]
    fn zero_iterations_keep_the_model() {
        let m = Model::random(ModelKind::FeatureBrick, 2, 2, Entangler::Ring, RandomStream::new(0)).unwrap();
        let data = m.prepare(&[Point { x: [0.1, 0.2], y: 1 }]).unwrap();
        let cfg = TrainConfig {
            max_iters: 0,
            ..TrainConfig::default()
        };
        let r = train(&m, &data, &cfg).unwrap();
        assert_eq!(r.model, m);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn separable_points_are_learned() {
        // Class is decided by x1 alone: a single-qubit re-uploading circuit
        // can place x1 < π and x1 > π on opposite poles.
        let pts: Vec<Point> = [(0.5, 1.0, 1), (1.5, 4.0, 1), (4.0, 2.0, 0), (5.5, 5.0, 0)]
            .iter()
            .map(|&(a, b, y)| Point { x: [a, b], y })
            .collect();
        let m = Model::random(ModelKind::Reupload, 1, 3, Entangler::Ring, RandomStream::new(4)).unwrap();
        let data = m.prepare(&pts).unwrap();
        let r = train(&m, &data, &TrainConfig::default()).unwrap();
        assert_eq!(accuracy(&r.model, &data), 1.0);
        assert!(r.best_loss <= r.trace[0]);
        let bt = r.best_trace();
        assert!(bt.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn one_dimensional_universality_smoke() {
        // Interval labels on x1 only.
        let pts: Vec<Point> = (0..24)
            .map(|i| {
                let x1 = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 24.0;
                let y = u8::from((1.5..4.0).contains(&x1));
                Point { x: [x1, 0.0], y }
            })
            .collect();
        let m = Model::random(ModelKind::Reupload, 1, 4, Entangler::Ring, RandomStream::new(11)).unwrap();
        let data = m.prepare(&pts).unwrap();
        let r = train(&m, &data, &TrainConfig::default()).unwrap();
        assert!(accuracy(&r.model, &data) >= 0.95);
    }
}
