use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::{accuracy, train, TrainConfig};
use super::{Entangler, Model, ModelKind, Point, Prepared, MODULE};
use crate::csvio::{fmt_f64, Table};
use crate::stats::{mean, replicate_std, sample_variance};
use crate::{par, stats, Error, RandomStream, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Optimized parameters, training grid.
    Train,
    /// Optimized parameters, test points.
    Test,
    /// Uniform random parameters, test points.
    Random,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Regime::Train),
            "test" => Ok(Regime::Test),
            "random" => Ok(Regime::Random),
            other => Err(Error::invalid(MODULE, format!("unknown regime `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Train => "train",
            Regime::Test => "test",
            Regime::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: ModelKind,
    pub n_list: Vec<usize>,
    pub layers_list: Vec<usize>,
    /// Trained models per cell, and random parameter draws per cell.
    pub repeats: usize,
    pub entangler: Entangler,
    pub train: TrainConfig,
    pub bootstrap: usize,
    /// Regimes to emit; training runs only if train or test is listed.
    pub regimes: Vec<Regime>,
}

impl SweepConfig {
    pub fn new(kind: ModelKind, n_list: Vec<usize>, layers_list: Vec<usize>) -> Self {
        SweepConfig {
            kind,
            n_list,
            layers_list,
            repeats: 5,
            entangler: Entangler::Ring,
            train: TrainConfig::default(),
            bootstrap: crate::moments::DEFAULT_BOOTSTRAP,
            regimes: vec![Regime::Train, Regime::Test, Regime::Random],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub n: usize,
    pub layers: usize,
    pub regime: Regime,
    /// Training repeat; `None` for the pooled random regime.
    pub repeat: Option<usize>,
    pub mu1_minus_half: f64,
    pub mu1_std_error: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    pub accuracy: f64,
    /// Optimizer iteration of the kept parameters.
    pub best_iter: Option<usize>,
}

fn summarize(z: &[f64]) -> (f64, f64) {
    (mean(z) - 0.5, sample_variance(z))
}

fn bootstrap_errors(z: &[f64], resamples: usize, stream: RandomStream) -> (f64, f64) {
    let reps = stats::bootstrap(z.len(), resamples, stream, |idx| {
        let s: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        let (m, v) = summarize(&s);
        vec![m, v]
    });
    let sd = replicate_std(&reps);
    (sd[0], sd[1])
}

fn cell_stream(stream: &RandomStream, kind: ModelKind, n: usize, layers: usize) -> RandomStream {
    stream.named(kind.as_str()).child(n as u64).child(layers as u64)
}

struct Cell {
    n: usize,
    layers: usize,
    repeat: usize,
}

fn trained_rows(
    cfg: &SweepConfig,
    cell: &Cell,
    train_set: &[Prepared],
    test_set: &[Prepared],
    stream: &RandomStream,
) -> Result<[SweepRow; 2]> {
    let cs = cell_stream(stream, cfg.kind, cell.n, cell.layers);
    let init = Model::random(
        cfg.kind,
        cell.n,
        cell.layers,
        cfg.entangler,
        cs.named("init").substream(cell.repeat as u64),
    )?;
    let fit = train(&init, train_set, &cfg.train)?;
    let row = |regime, data: &[Prepared], errors: (f64, f64)| {
        let z = fit.model.margins(data);
        let (m, v) = summarize(&z);
        SweepRow {
            model: cfg.kind,
            n: cell.n,
            layers: cell.layers,
            regime,
            repeat: Some(cell.repeat),
            mu1_minus_half: m,
            mu1_std_error: errors.0,
            variance: v,
            variance_std_error: errors.1,
            accuracy: accuracy(&fit.model, data),
            best_iter: Some(fit.best_iter),
        }
    };
    // The training grid is the whole population: no resampling error.
    let train_row = row(Regime::Train, train_set, (0.0, 0.0));
    let test_z = fit.model.margins(test_set);
    let errors = bootstrap_errors(
        &test_z,
        cfg.bootstrap,
        cs.named("bootstrap").substream(cell.repeat as u64),
    );
    let test_row = row(Regime::Test, test_set, errors);
    Ok([train_row, test_row])
}

/// Pools `repeats` uniform parameter draws on the test points; errors come
/// from a two-level bootstrap over draws and points.
fn random_row(
    cfg: &SweepConfig,
    n: usize,
    layers: usize,
    test_set: &[Prepared],
    stream: &RandomStream,
) -> Result<SweepRow> {
    let cs = cell_stream(stream, cfg.kind, n, layers);
    let draws = cs.named("random");
    let models: Vec<Model> = (0..cfg.repeats)
        .map(|j| Model::random(cfg.kind, n, layers, cfg.entangler, draws.substream(j as u64)))
        .collect::<Result<_>>()?;
    let z: Vec<Vec<f64>> = models.iter().map(|m| m.margins(test_set)).collect();
    let pooled: Vec<f64> = z.iter().flatten().copied().collect();
    let (m, v) = summarize(&pooled);
    let acc = mean(&models.iter().map(|md| accuracy(md, test_set)).collect::<Vec<_>>());
    let boot = cs.named("random-bootstrap");
    let reps = par::map_range(cfg.bootstrap, |r| {
        let mut rng = boot.substream(r as u64).rng();
        let th: Vec<usize> = (0..z.len()).map(|_| rng.random_range(0..z.len())).collect();
        let pts: Vec<usize> = (0..test_set.len())
            .map(|_| rng.random_range(0..test_set.len()))
            .collect();
        let s: Vec<f64> = th
            .iter()
            .flat_map(|&a| pts.iter().map(move |&b| (a, b)))
            .map(|(a, b)| z[a][b])
            .collect();
        let (m, v) = summarize(&s);
        vec![m, v]
    });
    let sd = replicate_std(&reps);
    Ok(SweepRow {
        model: cfg.kind,
        n,
        layers,
        regime: Regime::Random,
        repeat: None,
        mu1_minus_half: m,
        mu1_std_error: sd.first().copied().unwrap_or(0.0),
        variance: v,
        variance_std_error: sd.get(1).copied().unwrap_or(0.0),
        accuracy: acc,
        best_iter: None,
    })
}

/// Margin moments across (n, L) for trained and random parameters.
///
/// Rows are ordered by n, then L, then (train, test) per repeat, then the
/// random row.
pub fn moment_sweep(
    cfg: &SweepConfig,
    train_points: &[Point],
    test_points: &[Point],
    stream: &RandomStream,
) -> Result<Vec<SweepRow>> {
    if cfg.repeats == 0 {
        return Err(Error::invalid(MODULE, "sweep needs at least one repeat"));
    }
    if train_points.is_empty() || test_points.is_empty() {
        return Err(Error::invalid(MODULE, "sweep needs non-empty train and test splits"));
    }
    let wants = |r: Regime| cfg.regimes.contains(&r);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        // Models of one width share the cached feature-map states.
        let probe = Model::new(cfg.kind, n, 0, cfg.entangler, Vec::new())?;
        let train_set = probe.prepare(train_points)?;
        let test_set = probe.prepare(test_points)?;
        for &layers in &cfg.layers_list {
            if wants(Regime::Train) || wants(Regime::Test) {
                let cells: Vec<Cell> = (0..cfg.repeats).map(|repeat| Cell { n, layers, repeat }).collect();
                let out = par::map_slice(&cells, |c| trained_rows(cfg, c, &train_set, &test_set, stream));
                for pair in out {
                    rows.extend(pair?.into_iter().filter(|r| wants(r.regime)));
                }
            }
            if wants(Regime::Random) {
                rows.push(random_row(cfg, n, layers, &test_set, stream)?);
            }
        }
    }
    Ok(rows)
}

/// The optimizer is not a column; training rows always use Adam.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], seed: u64, w: W) -> Result<()> {
    let mut t = Table::new(&[
        "model",
        "n",
        "L",
        "regime",
        "mu1_minus_half",
        "mu1_stderr",
        "var",
        "var_stderr",
        "seed",
    ]);
    for r in rows {
        t.push(vec![
            r.model.as_str().to_string(),
            r.n.to_string(),
            r.layers.to_string(),
            r.regime.as_str().to_string(),
            fmt_f64(r.mu1_minus_half),
            fmt_f64(r.mu1_std_error),
            fmt_f64(r.variance),
            fmt_f64(r.variance_std_error),
            seed.to_string(),
        ]);
    }
    t.write(w)
}

#[cfg(test)]
mod tests {
    use super::super::generate_dataset;
    use super::*;

    fn quick(kind: ModelKind, n_list: Vec<usize>, layers: Vec<usize>) -> SweepConfig {
        let mut c = SweepConfig::new(kind, n_list, layers);
        c.repeats = 2;
        c.bootstrap = 50;
        c.train.max_iters = 5;
        c
    }

    #[test]
    fn row_layout_and_determinism() {
        let data = generate_dataset(1, 4, 30).unwrap();
        let cfg = quick(ModelKind::Reupload, vec![2], vec![1, 2]);
        let s = RandomStream::new(9);
        let a = moment_sweep(&cfg, &data.train, &data.test, &s).unwrap();
        assert_eq!(a.len(), 2 * (2 * 2 + 1));
        let regimes: Vec<Regime> = a[..5].iter().map(|r| r.regime).collect();
        assert_eq!(
            regimes,
            [Regime::Train, Regime::Test, Regime::Train, Regime::Test, Regime::Random]
        );
        for r in a.iter().filter(|r| r.regime == Regime::Train) {
            assert_eq!((r.mu1_std_error, r.variance_std_error), (0.0, 0.0));
        }
        let b = moment_sweep(&cfg, &data.train, &data.test, &s).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_sweep_csv(&a, 9, &mut ba).unwrap();
        write_sweep_csv(&b, 9, &mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn randomization_trend() {
        let data = generate_dataset(2, 4, 100).unwrap();
        for kind in [ModelKind::FeatureBrick, ModelKind::Reupload] {
            let mut cfg = quick(kind, vec![2], vec![1]);
            cfg.regimes = vec![Regime::Random];
            cfg.repeats = 10;
            let s = RandomStream::new(5);
            let shallow = moment_sweep(&cfg, &data.train, &data.test, &s).unwrap()[0]
                .mu1_minus_half
                .abs();
            cfg.n_list = vec![6];
            cfg.layers_list = vec![10];
            let deep = moment_sweep(&cfg, &data.train, &data.test, &s).unwrap()[0]
                .mu1_minus_half
                .abs();
            assert!(deep <= shallow, "{kind:?}: {deep} > {shallow}");
        }
    }
}
