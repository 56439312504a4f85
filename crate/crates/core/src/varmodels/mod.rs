//! Variational binary classifiers on two-dimensional data.
//!
//! Two families share one margin: a fixed feature map followed by a trainable
//! hardware-efficient ansatz, and a data re-uploading circuit whose rotation
//! angles are affine in the data. Both are read out through the full parity
//! `Z ⊗ … ⊗ Z`.

mod dataset;
mod sweep;
mod train;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::simcore::{apply_circuit, Gate, StateVector, MAX_QUBITS};
use crate::{par, Error, RandomStream, Result};

pub use dataset::{generate_dataset, label_point, write_points_csv, LabeledDataset, Point};
pub use sweep::{moment_sweep, write_sweep_csv, Regime, SweepConfig, SweepRow};
pub use train::{accuracy, train, TrainConfig, TrainResult};

const MODULE: &str = "varmodels";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMapKind {
    Brick,
    NonBrick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    FeatureBrick,
    FeatureNonbrick,
    Reupload,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::FeatureBrick, ModelKind::FeatureNonbrick, ModelKind::Reupload];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::FeatureBrick => "feature-brick",
            ModelKind::FeatureNonbrick => "feature-nonbrick",
            ModelKind::Reupload => "reupload",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(MODULE, format!("unknown model kind {s:?}")))
    }

    pub fn feature_map(self) -> Option<FeatureMapKind> {
        match self {
            ModelKind::FeatureBrick => Some(FeatureMapKind::Brick),
            ModelKind::FeatureNonbrick => Some(FeatureMapKind::NonBrick),
            ModelKind::Reupload => None,
        }
    }

    /// Trainable parameters per qubit per layer.
    pub fn params_per_qubit_layer(self) -> usize {
        match self {
            ModelKind::Reupload => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Entangler {
    #[default]
    Ring,
    Chain,
    None,
}

impl Entangler {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Entangler::Ring),
            "chain" => Ok(Entangler::Chain),
            "none" => Ok(Entangler::None),
            _ => Err(Error::invalid(MODULE, format!("unknown entangler {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Entangler::Ring => "ring",
            Entangler::Chain => "chain",
            Entangler::None => "none",
        }
    }

    /// CNOT layer on `n` qubits. A two-qubit ring is a single CNOT.
    pub fn gates(self, n: usize) -> Vec<Gate> {
        let cnot = |control, target| Gate::Cnot { control, target };
        match self {
            Entangler::None => Vec::new(),
            _ if n < 2 => Vec::new(),
            Entangler::Ring if n > 2 => (0..n).map(|q| cnot(q, (q + 1) % n)).collect(),
            _ => (0..n - 1).map(|q| cnot(q, q + 1)).collect(),
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::invalid(
            MODULE,
            format!("n must lie in 1..={MAX_QUBITS}, got {n}"),
        ));
    }
    Ok(())
}

/// Encoding circuit: two repetitions of Hadamards, `R_Z(x_{q mod 2})` on
/// every qubit and `R_ZZ(2(π − x_a)(π − x_b))` on neighbouring pairs.
///
/// Brick pairs `(0,1), (2,3), …` and then `(1,2), (3,4), …`; non-brick runs a
/// single chain `(0,1), (1,2), …`.
pub fn feature_map_gates(x: [f64; 2], n: usize, kind: FeatureMapKind) -> Vec<Gate> {
    let pairs: Vec<(usize, usize)> = match kind {
        FeatureMapKind::Brick => (0..n.saturating_sub(1))
            .step_by(2)
            .chain((1..n.saturating_sub(1)).step_by(2))
            .map(|q| (q, q + 1))
            .collect(),
        FeatureMapKind::NonBrick => (0..n.saturating_sub(1)).map(|q| (q, q + 1)).collect(),
    };
    let mut gates = Vec::new();
    for _ in 0..2 {
        gates.extend((0..n).map(Gate::H));
        gates.extend((0..n).map(|q| Gate::Rz(q, x[q % 2])));
        gates.extend(
            pairs
                .iter()
                .map(|&(a, b)| Gate::Rzz(a, b, 2.0 * (PI - x[a % 2]) * (PI - x[b % 2]))),
        );
    }
    gates
}

pub fn feature_map(x: [f64; 2], n: usize, kind: FeatureMapKind) -> Result<StateVector> {
    check_qubits(n)?;
    apply_circuit(&StateVector::zero(n), &feature_map_gates(x, n, kind))
}

/// Per layer: `R_Y(θ_{l,q})` on every qubit, then a CNOT ring.
pub fn hea_ansatz(theta: &[f64], n: usize, layers: usize) -> Result<Vec<Gate>> {
    if theta.len() != n * layers {
        return Err(Error::invalid(
            MODULE,
            format!("{} angles for {n} qubits × {layers} layers", theta.len()),
        ));
    }
    let mut gates = Vec::with_capacity(layers * 2 * n);
    for l in 0..layers {
        gates.extend((0..n).map(|q| Gate::Ry(q, theta[l * n + q])));
        gates.extend(Entangler::Ring.gates(n));
    }
    Ok(gates)
}

/// How each gate angle depends on the parameters: `∂angle/∂θ_p = coeff`.
type Links = Vec<(usize, f64)>;

fn reupload_gates(
    x: [f64; 2],
    theta: &[f64],
    n: usize,
    layers: usize,
    entangler: Entangler,
) -> (Vec<Gate>, Vec<Links>) {
    let mut gates = Vec::new();
    let mut links = Vec::new();
    for l in 0..layers {
        for q in 0..n {
            let p = (l * n + q) * 4;
            gates.push(Gate::Rz(q, theta[p] * x[0] + theta[p + 1]));
            links.push(vec![(p, x[0]), (p + 1, 1.0)]);
            gates.push(Gate::Ry(q, theta[p + 2] * x[1] + theta[p + 3]));
            links.push(vec![(p + 2, x[1]), (p + 3, 1.0)]);
        }
        for g in entangler.gates(n) {
            gates.push(g);
            links.push(Vec::new());
        }
    }
    (gates, links)
}

/// State `|ψ_θ(x)⟩` of a re-uploading circuit on `|0…0⟩`.
pub fn reupload_circuit(
    x: [f64; 2],
    theta: &[f64],
    n: usize,
    layers: usize,
    entangler: Entangler,
) -> Result<StateVector> {
    check_qubits(n)?;
    if theta.len() != 4 * n * layers {
        return Err(Error::invalid(
            MODULE,
            format!("{} parameters for {n} qubits × {layers} layers", theta.len()),
        ));
    }
    let (gates, _) = reupload_gates(x, theta, n, layers, entangler);
    apply_circuit(&StateVector::zero(n), &gates)
}

/// `⟨Z ⊗ … ⊗ Z⟩`.
pub fn parity(state: &StateVector) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i.count_ones() % 2 == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum()
}

/// `½(1 − ỹ⟨Z⊗n⟩)` with `ỹ = +1` for class 1 and `−1` for class 0.
pub fn margin_from_parity(parity: f64, y: u8) -> f64 {
    let sign = if y == 1 { 1.0 } else { -1.0 };
    (0.5 * (1.0 - sign * parity)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub n: usize,
    pub layers: usize,
    pub entangler: Entangler,
    pub theta: Vec<f64>,
}

impl Model {
    pub fn new(kind: ModelKind, n: usize, layers: usize, entangler: Entangler, theta: Vec<f64>) -> Result<Self> {
        check_qubits(n)?;
        let want = kind.params_per_qubit_layer() * n * layers;
        if theta.len() != want {
            return Err(Error::invalid(
                MODULE,
                format!("{} parameters given, {} expects {want}", theta.len(), kind.as_str()),
            ));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid(MODULE, "parameters must be finite"));
        }
        Ok(Model {
            kind,
            n,
            layers,
            entangler,
            theta,
        })
    }

    /// Parameters drawn uniformly from `[0, 2π)`.
    pub fn random(
        kind: ModelKind,
        n: usize,
        layers: usize,
        entangler: Entangler,
        stream: RandomStream,
    ) -> Result<Self> {
        let mut rng = stream.rng();
        let theta = (0..kind.params_per_qubit_layer() * n * layers)
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        Self::new(kind, n, layers, entangler, theta)
    }

    /// Shape of the parameter array.
    pub fn shape(&self) -> Vec<usize> {
        match self.kind {
            ModelKind::Reupload => vec![self.layers, self.n, 4],
            _ => vec![self.layers, self.n],
        }
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.n, self.layers, self.entangler, theta)
    }

    /// Prepares data points for repeated evaluation, caching the feature-map
    /// state where the model has one.
    pub fn prepare(&self, points: &[Point]) -> Result<Vec<Prepared>> {
        let kind = self.kind;
        let n = self.n;
        par::map_slice(points, |p| {
            let initial = match kind.feature_map() {
                Some(fm) => feature_map(p.x, n, fm)?,
                None => StateVector::zero(n),
            };
            Ok(Prepared { point: *p, initial })
        })
        .into_iter()
        .collect()
    }

    fn circuit(&self, x: [f64; 2]) -> (Vec<Gate>, Vec<Links>) {
        match self.kind {
            ModelKind::Reupload => reupload_gates(x, &self.theta, self.n, self.layers, self.entangler),
            _ => {
                let gates = hea_ansatz(&self.theta, self.n, self.layers).expect("length checked at construction");
                let mut links = Vec::with_capacity(gates.len());
                for l in 0..self.layers {
                    links.extend((0..self.n).map(|q| vec![(l * self.n + q, 1.0)]));
                    links.extend(Entangler::Ring.gates(self.n).iter().map(|_| Vec::new()));
                }
                (gates, links)
            }
        }
    }

    fn run(&self, prepared: &Prepared) -> StateVector {
        let (gates, _) = self.circuit(prepared.point.x);
        apply_circuit(&prepared.initial, &gates).expect("gates built for this register")
    }

    pub fn state(&self, x: [f64; 2]) -> Result<StateVector> {
        let p = self.prepare(&[Point { x, y: 0 }])?;
        Ok(self.run(&p[0]))
    }

    pub fn parity_at(&self, prepared: &Prepared) -> f64 {
        parity(&self.run(prepared))
    }

    pub fn margin(&self, prepared: &Prepared) -> f64 {
        margin_from_parity(self.parity_at(prepared), prepared.point.y)
    }

    pub fn margins(&self, data: &[Prepared]) -> Vec<f64> {
        par::map_slice(data, |p| self.margin(p))
    }

    /// `Σ z` over the split.
    pub fn loss(&self, data: &[Prepared]) -> f64 {
        self.margins(data).iter().sum()
    }

    /// Parameter-shift gradient of the margin at one point.
    ///
    /// Each rotation angle is shifted by `±π/2`, and the angle derivative is
    /// spread over the parameters it depends on with the chain rule. States
    /// before every gate are kept so a shifted run only replays the suffix.
    pub fn margin_gradient(&self, prepared: &Prepared) -> Vec<f64> {
        let (gates, links) = self.circuit(prepared.point.x);
        let mut prefixes = Vec::with_capacity(gates.len() + 1);
        prefixes.push(prepared.initial.clone());
        for g in &gates {
            let next = apply_circuit(prefixes.last().expect("non-empty"), std::slice::from_ref(g)).expect("valid gate");
            prefixes.push(next);
        }
        let y = prepared.point.y;
        let mut grad = vec![0.0; self.theta.len()];
        for (i, g) in gates.iter().enumerate() {
            if links[i].is_empty() {
                continue;
            }
            let eval = |delta: f64| {
                let mut s = apply_circuit(&prefixes[i], &[g.shifted(delta)]).expect("valid gate");
                s = apply_circuit(&s, &gates[i + 1..]).expect("valid gates");
                margin_from_parity(parity(&s), y)
            };
            let d = 0.5 * (eval(FRAC_PI_2) - eval(-FRAC_PI_2));
            for &(p, c) in &links[i] {
                grad[p] += c * d;
            }
        }
        grad
    }

    /// Gradient of [`Model::loss`].
    pub fn gradient(&self, data: &[Prepared]) -> Vec<f64> {
        let per_point = par::map_slice(data, |p| self.margin_gradient(p));
        let mut total = vec![0.0; self.theta.len()];
        for g in per_point {
            for (t, v) in total.iter_mut().zip(g) {
                *t += v;
            }
        }
        total
    }
}

/// A data point with its model-independent initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub point: Point,
    pub initial: StateVector,
}

/// Flat persisted form: kind, shape and parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model: ModelKind,
    pub n: usize,
    pub layers: usize,
    pub entangler: Entangler,
    pub shape: Vec<usize>,
    pub theta: Vec<f64>,
}

impl From<&Model> for ModelDocument {
    fn from(m: &Model) -> Self {
        ModelDocument {
            model: m.kind,
            n: m.n,
            layers: m.layers,
            entangler: m.entangler,
            shape: m.shape(),
            theta: m.theta.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for Model {
    type Error = Error;

    fn try_from(d: ModelDocument) -> Result<Self> {
        let m = Model::new(d.model, d.n, d.layers, d.entangler, d.theta)?;
        if m.shape() != d.shape {
            return Err(Error::invalid(
                MODULE,
                format!("shape {:?} does not match {:?}", d.shape, m.shape()),
            ));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prepared(model: &Model, pts: &[([f64; 2], u8)]) -> Vec<Prepared> {
        let points: Vec<Point> = pts.iter().map(|&(x, y)| Point { x, y }).collect();
        model.prepare(&points).unwrap()
    }

    #[test]
    fn single_qubit_feature_map_has_no_entanglers() {
        let g = feature_map_gates([0.3, 0.9], 1, FeatureMapKind::Brick);
        assert_eq!(g, vec![Gate::H(0), Gate::Rz(0, 0.3), Gate::H(0), Gate::Rz(0, 0.3)]);
    }

    #[test]
    fn feature_map_layout() {
        let g = feature_map_gates([0.0, 0.0], 2, FeatureMapKind::Brick);
        let rzz: Vec<_> = g.iter().filter(|g| matches!(g, Gate::Rzz(..))).collect();
        assert_eq!(rzz.len(), 2);
        assert_eq!(*rzz[0], Gate::Rzz(0, 1, 2.0 * PI * PI));
        let pairs = |kind| {
            feature_map_gates([0.1, 0.2], 5, kind)
                .into_iter()
                .filter_map(|g| if let Gate::Rzz(a, b, _) = g { Some((a, b)) } else { None })
                .take(4)
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(FeatureMapKind::Brick), vec![(0, 1), (2, 3), (1, 2), (3, 4)]);
        assert_eq!(pairs(FeatureMapKind::NonBrick), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let a = feature_map([1.0, 2.0], 3, FeatureMapKind::Brick).unwrap();
        let b = feature_map([1.0, 2.0], 3, FeatureMapKind::Brick).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hea_structure() {
        assert!(hea_ansatz(&[], 3, 0).unwrap().is_empty());
        let g = hea_ansatz(&[0.0; 6], 3, 2).unwrap();
        assert_eq!(g.len(), 2 * (3 + 3));
        let two = hea_ansatz(&[0.0; 2], 2, 1).unwrap();
        assert_eq!(two.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count(), 1);
        assert!(hea_ansatz(&[0.0; 5], 3, 2).is_err());
        // RY(0) = I: only the CNOTs act.
        let s = StateVector::basis(3, 4);
        let all = apply_circuit(&s, &g).unwrap();
        let cnots: Vec<Gate> = g.into_iter().filter(|g| matches!(g, Gate::Cnot { .. })).collect();
        assert!(all.distance(&apply_circuit(&s, &cnots).unwrap()) < 1e-15);
    }

    #[test]
    fn reupload_examples() {
        let s = reupload_circuit([0.4, 0.7], &[0.0; 4], 1, 1, Entangler::Ring).unwrap();
        assert!(s.distance(&StateVector::zero(1)) < 1e-15);
        let theta = [0.0, 0.3, 0.0, 1.1, 0.0, 0.2, 0.0, -0.4];
        let a = reupload_circuit([0.1, 0.2], &theta, 2, 1, Entangler::Ring).unwrap();
        let b = reupload_circuit([2.0, 5.0], &theta, 2, 1, Entangler::Ring).unwrap();
        assert!(a.distance(&b) < 1e-15);
        let s = reupload_circuit([0.0, PI], &[0.0, 0.0, 1.0, 0.0], 1, 1, Entangler::Ring).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin_from_parity(1.0, 1), 0.0);
        assert_eq!(margin_from_parity(0.0, 0), 0.5);
        assert_eq!(margin_from_parity(0.0, 1), 0.5);
        assert!((margin_from_parity(-0.4, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn loss_is_the_sum_of_margins() {
        let m = Model::random(ModelKind::Reupload, 2, 2, Entangler::Ring, RandomStream::new(1)).unwrap();
        let data = prepared(&m, &[([0.1, 0.2], 0), ([1.0, 3.0], 1), ([4.0, 0.5], 1)]);
        let z = m.margins(&data);
        assert!((m.loss(&data) - z.iter().sum::<f64>()).abs() < 1e-10);
        for (p, zi) in data.iter().zip(&z) {
            let predicted = if m.parity_at(p) > 0.0 { 1 } else { 0 };
            assert_eq!(*zi < 0.5, predicted == p.point.y);
        }
    }

    fn finite_difference(m: &Model, data: &[Prepared], h: f64) -> Vec<f64> {
        (0..m.theta.len())
            .map(|j| {
                let mut up = m.theta.clone();
                let mut dn = m.theta.clone();
                up[j] += h;
                dn[j] -= h;
                (m.with_theta(up).unwrap().loss(data) - m.with_theta(dn).unwrap().loss(data)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn shift_rule_matches_finite_differences() {
        for kind in ModelKind::ALL {
            for seed in 0..5 {
                let m = Model::random(kind, 2, 2, Entangler::Ring, RandomStream::new(seed)).unwrap();
                let data = prepared(&m, &[([0.3, 1.7], 0), ([5.1, 2.2], 1)]);
                let g = m.gradient(&data);
                let fd = finite_difference(&m, &data, 1e-5);
                let worst = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(worst < 1e-5, "{kind:?} seed {seed}: {worst}");
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_a_symmetric_point() {
        // RY(π/2) on one qubit: ⟨Z⟩ = 0 and the derivative of ⟨Z⟩ is −1, so
        // opposite labels at the same x cancel.
        let m = Model::new(
            ModelKind::Reupload,
            1,
            1,
            Entangler::Ring,
            vec![0.0, 0.0, 0.0, FRAC_PI_2],
        )
        .unwrap();
        let data = prepared(&m, &[([0.5, 0.5], 0), ([0.5, 0.5], 1)]);
        let g = m.gradient(&data);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn document_round_trip() {
        let m = Model::random(ModelKind::Reupload, 3, 2, Entangler::Chain, RandomStream::new(2)).unwrap();
        let doc = ModelDocument::from(&m);
        assert_eq!(doc.shape, vec![2, 3, 4]);
        assert_eq!(Model::try_from(doc).unwrap(), m);
        assert!(Model::new(ModelKind::FeatureBrick, 2, 2, Entangler::Ring, vec![0.0; 3]).is_err());
    }
}
