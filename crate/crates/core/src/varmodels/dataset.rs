use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{feature_map, parity, FeatureMapKind, MODULE};
use crate::csvio::{fmt_f64, Table};
use crate::simcore::{sample_unitary, Unitary};
use crate::{Error, RandomStream, Result};

/// Resampling budget for a unitary that puts every point in one class.
const MAX_UNITARY_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: [f64; 2],
    pub y: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub train: Vec<Point>,
    pub test: Vec<Point>,
    pub seed: u64,
    pub grid_side: usize,
    /// Index of the accepted unitary draw.
    pub unitary_attempt: u64,
    pub unitary: Unitary,
}

/// Class 1 when `⟨E(x)| V† Z⊗Z V |E(x)⟩ > 0`, with `E` the two-qubit brick
/// feature map.
pub fn label_point(x: [f64; 2], v: &Unitary) -> Result<u8> {
    let e = feature_map(x, 2, FeatureMapKind::Brick)?;
    Ok(u8::from(parity(&v.apply(&e)?) > 0.0))
}

fn label_all(xs: &[[f64; 2]], v: &Unitary) -> Result<Vec<Point>> {
    xs.iter()
        .map(|&x| {
            Ok(Point {
                x,
                y: label_point(x, v)?,
            })
        })
        .collect()
}

fn both_classes(points: &[Point]) -> bool {
    points.iter().any(|p| p.y == 0) && points.iter().any(|p| p.y == 1)
}

/// Equispaced `grid_side²` training grid on `[0, 2π)²` and `test_count`
/// uniform test points, labelled by a seeded random unitary.
pub fn generate_dataset(seed: u64, grid_side: usize, test_count: usize) -> Result<LabeledDataset> {
    if grid_side < 2 {
        return Err(Error::invalid(
            MODULE,
            format!("grid side must be at least 2, got {grid_side}"),
        ));
    }
    let root = RandomStream::new(seed);
    let step = 2.0 * PI / grid_side as f64;
    let grid: Vec<[f64; 2]> = (0..grid_side)
        .flat_map(|i| (0..grid_side).map(move |j| [i as f64 * step, j as f64 * step]))
        .collect();
    let mut rng = root.named("test-points").rng();
    let uniform: Vec<[f64; 2]> = (0..test_count)
        .map(|_| [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)])
        .collect();
    let unitaries = root.named("unitary");
    for attempt in 0..MAX_UNITARY_ATTEMPTS {
        let v = sample_unitary(4, unitaries.substream(attempt))?;
        let train = label_all(&grid, &v)?;
        let test = label_all(&uniform, &v)?;
        if both_classes(&train) && (test.is_empty() || both_classes(&test)) {
            return Ok(LabeledDataset {
                train,
                test,
                seed,
                grid_side,
                unitary_attempt: attempt,
                unitary: v,
            });
        }
    }
    Err(Error::Infeasible {
        module: MODULE,
        msg: format!("no unitary with two non-empty classes in {MAX_UNITARY_ATTEMPTS} draws"),
    })
}

pub fn write_points_csv<W: Write>(points: &[Point], w: W) -> Result<()> {
    let mut t = Table::new(&["x1", "x2", "y"]);
    for p in points {
        t.push(vec![fmt_f64(p.x[0]), fmt_f64(p.x[1]), p.y.to_string()]);
    }
    t.write(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_labels() {
        let a = generate_dataset(3, 6, 20).unwrap();
        let b = generate_dataset(3, 6, 20).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.len(), 36);
        for p in a.train.iter().chain(&a.test) {
            assert_eq!(label_point(p.x, &a.unitary).unwrap(), p.y);
            assert!(p.x.iter().all(|&v| (0.0..2.0 * PI).contains(&v)));
        }
        assert!(generate_dataset(3, 1, 0).is_err());
    }

    #[test]
    fn classes_are_rarely_degenerate() {
        let nonempty = (0..100)
            .filter(|&seed| {
                let d = generate_dataset(seed, 8, 0).unwrap();
                d.unitary_attempt == 0
            })
            .count();
        assert!(nonempty >= 95);
    }
}
