use std::fs;
use std::path::{Path, PathBuf};

use margin_scope::csvio::{fmt_f64, Table};
use margin_scope::dlp::{dlp_report, margin_samples, write_report_csv, DlpInstance};
use margin_scope::margin::{
    bernstein_bound, bernstein_condition, chebyshev_failure_bound, empirical_failure, subgaussian_bound,
    subgaussian_condition, write_bounds_csv, write_failure_csv, write_samples_csv, MarginSample, MarginSpec,
};
use margin_scope::moments::{
    anti_randomness, concentration, estimate_moments, haar_centered_moment, haar_raw_moment, write_anti_randomness_csv,
    write_moments_csv, Comparison, Spectrum,
};
use margin_scope::simcore::{sample_haar_state, HaarConvention, Observable, MAX_QUBITS};
use margin_scope::stats::{centered_moments, mean};
use margin_scope::toymodel::{shadow_design_experiment, write_shadow_csv, ShadowConfig};
use margin_scope::varmodels::{
    accuracy, generate_dataset, moment_sweep, train, write_points_csv, write_sweep_csv, Entangler, Model,
    ModelDocument, ModelKind, Point, Regime, SweepConfig, TrainConfig,
};
use margin_scope::{par, RandomStream};

use crate::args::*;
use crate::output::OutTarget;
use crate::plot;
use crate::{CliError, CliResult};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::HaarMoments(a) => haar_moments(a),
        Command::Toy(a) => toy(a),
        Command::Dlp(a) => dlp(a),
        Command::Dataset {
            action: DatasetCommand::Gen(a),
        } => dataset_gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::MarginReport(a) => margin_report(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn haar_convention(c: Convention) -> HaarConvention {
    match c {
        Convention::Real => HaarConvention::RealSphere,
        Convention::Complex => HaarConvention::Complex,
    }
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::FeatureBrick => ModelKind::FeatureBrick,
        ModelArg::FeatureNonbrick => ModelKind::FeatureNonbrick,
        ModelArg::Reupload => ModelKind::Reupload,
    }
}

fn entangler(e: EntanglerArg) -> Entangler {
    match e {
        EntanglerArg::Ring => Entangler::Ring,
        EntanglerArg::Chain => Entangler::Chain,
        EntanglerArg::None => Entangler::None,
    }
}

fn spectrum(a: &HaarMomentsArgs) -> CliResult<Spectrum> {
    if let Some(rank) = a.projector_rank {
        let n = a.n.ok_or_else(|| usage("--projector-rank needs --n"))?;
        if n == 0 || n > 62 {
            return Err(usage(format!("--n must be in 1..=62, got {n}")));
        }
        return Ok(Spectrum::projector(rank, 1u64 << n)?);
    }
    if a.eigenvalues.is_empty() {
        return Err(usage("give --eigenvalues or --projector-rank"));
    }
    let mult = if a.multiplicities.is_empty() {
        vec![1; a.eigenvalues.len()]
    } else if a.multiplicities.len() == a.eigenvalues.len() {
        a.multiplicities.clone()
    } else {
        return Err(usage("--multiplicities must match --eigenvalues in length"));
    };
    Ok(Spectrum::new(a.eigenvalues.iter().copied().zip(mult).collect())?)
}

fn haar_moments(a: &HaarMomentsArgs) -> CliResult<()> {
    let spec = spectrum(a)?;
    let conv = haar_convention(a.convention);
    let alpha = concentration(conv);
    let mut out = OutTarget::new(&a.common.out, "haar_moments.csv")?;
    let mut table = Table::new(&["t", "raw", "centered"]);
    for t in 1..=a.t_max {
        table.push(vec![
            t.to_string(),
            fmt_f64(haar_raw_moment(&spec, t, alpha)?),
            fmt_f64(haar_centered_moment(&spec, t, alpha)?),
        ]);
    }
    let primary = out.primary().to_path_buf();
    out.write(&primary, |w| Ok(table.write(w)?))?;

    if a.samples > 0 {
        let dim = spec.total_dim();
        if !dim.is_power_of_two() || dim.trailing_zeros() as usize > MAX_QUBITS {
            return Err(usage(format!(
                "sampling needs a power-of-two dimension up to 2^{MAX_QUBITS}, got {dim}"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        let diagonal: Vec<f64> = spec
            .entries()
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m as usize))
            .collect();
        let obs = Observable::Diagonal(diagonal);
        let root = RandomStream::new(a.common.seed);
        let states = root.named("haar-states");
        let values = par::map_range(a.samples, |i| {
            sample_haar_state(n, conv, states.substream(i as u64)).and_then(|s| obs.expectation(&s))
        })
        .into_iter()
        .collect::<margin_scope::Result<Vec<f64>>>()?;
        let est = estimate_moments(&values, a.t_max, a.bootstrap, root.named("bootstrap"))?;
        let comparison = if a.raw_only {
            Comparison::RawOnly
        } else {
            Comparison::RawThenCentered
        };
        let report = anti_randomness(&est, &spec, alpha, a.epsilon, comparison)?;
        let p = out.sibling("estimates", "csv");
        out.write(&p, |w| Ok(write_moments_csv(&est, w)?))?;
        let p = out.sibling("anti_randomness", "csv");
        out.write(&p, |w| Ok(write_anti_randomness_csv(&report, w)?))?;
    }
    out.finish("haar-moments", a.common.seed, a, &[])
}

fn toy(a: &ToyArgs) -> CliResult<()> {
    let mut cfg = ShadowConfig::new(a.n);
    cfg.samples = a.samples;
    cfg.t_max = a.t_max;
    cfg.perm_counts = a.perms.clone();
    if let Some(m) = a.perm_samples {
        cfg.perm_samples = m;
    }
    cfg.epsilon = a.epsilon;
    cfg.bootstrap = a.bootstrap;
    let table = shadow_design_experiment(&cfg, RandomStream::new(a.common.seed))?;
    let mut out = OutTarget::new(&a.common.out, "fig3.csv")?;
    let p = out.primary().to_path_buf();
    out.write(&p, |w| Ok(write_shadow_csv(&table, w)?))?;
    let perm_samples = cfg.perm_samples.to_string();
    out.finish("toy", a.common.seed, a, &[("perm_samples", perm_samples)])
}

fn dlp(a: &DlpArgs) -> CliResult<()> {
    let g = match a.g.as_str() {
        "auto" => None,
        s => Some(
            s.parse::<u64>()
                .map_err(|_| usage(format!("--g must be an integer or `auto`, got `{s}`")))?,
        ),
    };
    let inst = DlpInstance::new(a.p, g, a.s, a.k_exp)?;
    let spec = MarginSpec::new(0.5, a.copies, a.delta)?;
    let report = dlp_report(
        &inst,
        &spec,
        a.trials,
        RandomStream::new(a.common.seed).named("dlp-shots"),
    )?;
    let samples = margin_samples(&inst)?;
    let mut out = OutTarget::new(&a.common.out, "report.csv")?;
    let p = out.primary().to_path_buf();
    out.write(&p, |w| Ok(write_report_csv(&[report], w)?))?;
    let p = out.sibling("samples", "csv");
    out.write(&p, |w| Ok(write_samples_csv(&samples, w)?))?;
    out.finish("dlp", a.common.seed, a, &[("generator", inst.g.to_string())])
}

fn dataset_gen(a: &DatasetArgs) -> CliResult<()> {
    let data = generate_dataset(a.common.seed, a.grid, a.test)?;
    let mut out = OutTarget::new(&a.common.out, "data.csv")?;
    let p = out.primary().to_path_buf();
    out.write(&p, |w| Ok(write_points_csv(&data.train, w)?))?;
    let p = out.sibling("test", "csv");
    out.write(&p, |w| Ok(write_points_csv(&data.test, w)?))?;
    out.finish(
        "dataset gen",
        a.common.seed,
        a,
        &[("unitary_attempt", data.unitary_attempt.to_string())],
    )
}

fn read_points(path: &Path) -> CliResult<Vec<Point>> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| CliError::data("cli", format!("{}: {e}", path.display())))?;
    let bad = |msg: String| CliError::data("cli", format!("{}: {msg}", path.display()));
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (ix1, ix2, iy) = (col("x1")?, col("x2")?, col("y")?);
    let mut pts = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: bad number", line + 2)))
        };
        let y = match rec.get(iy).map(str::trim) {
            Some("0") => 0,
            Some("1") => 1,
            _ => return Err(bad(format!("row {}: label must be 0 or 1", line + 2))),
        };
        pts.push(Point {
            x: [num(ix1)?, num(ix2)?],
            y,
        });
    }
    Ok(pts)
}

/// `data.csv` pairs with `data_test.csv`.
fn test_companion(data: &Path) -> PathBuf {
    let stem = data.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    data.with_file_name(format!("{stem}_test.csv"))
}

fn train_cmd(a: &TrainArgs) -> CliResult<()> {
    let points = read_points(&a.data)?;
    let companion = test_companion(&a.data);
    let test_points = if companion.exists() {
        read_points(&companion)?
    } else {
        Vec::new()
    };
    let root = RandomStream::new(a.common.seed);
    let init = Model::random(
        model_kind(a.model),
        a.n,
        a.layers,
        entangler(a.entangler),
        root.named("init"),
    )?;
    let data = init.prepare(&points)?;
    let cfg = TrainConfig {
        max_iters: a.iters,
        step: a.step,
        tolerance: a.tolerance,
    };
    let fit = train(&init, &data, &cfg)?;

    let mut out = OutTarget::new(&a.common.out, "model.json")?;
    let doc = ModelDocument::from(&fit.model);
    let p = out.primary().to_path_buf();
    out.write(&p, |w| {
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| CliError::Internal(e.to_string()))?;
        use std::io::Write;
        writeln!(w).map_err(|e| CliError::Internal(e.to_string()))
    })?;
    let mut trace = Table::new(&["iter", "loss", "best_loss"]);
    for (i, (l, b)) in fit.trace.iter().zip(fit.best_trace()).enumerate() {
        trace.push(vec![i.to_string(), fmt_f64(*l), fmt_f64(b)]);
    }
    let p = out.sibling("trace", "csv");
    out.write(&p, |w| Ok(trace.write(w)?))?;

    let mut notes = vec![
        ("optimizer", "adam".to_string()),
        ("best_iter", fit.best_iter.to_string()),
        ("train_accuracy", fmt_f64(accuracy(&fit.model, &data))),
    ];
    if !test_points.is_empty() {
        let test = fit.model.prepare(&test_points)?;
        notes.push(("test_accuracy", fmt_f64(accuracy(&fit.model, &test))));
    }
    out.finish("train", a.common.seed, a, &notes)
}

fn parse_layers(s: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("--layer-list must be `a:b` or a comma list, got `{s}`"));
    if let Some((lo, hi)) = s.split_once(':') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn sweep(a: &SweepArgs) -> CliResult<()> {
    let (train_points, test_points) = match &a.data {
        Some(path) => {
            let companion = test_companion(path);
            if !companion.exists() {
                return Err(CliError::data(
                    "cli",
                    format!("missing test split {}", companion.display()),
                ));
            }
            (read_points(path)?, read_points(&companion)?)
        }
        None => {
            let d = generate_dataset(a.common.seed, a.grid, a.test)?;
            (d.train, d.test)
        }
    };
    let regimes = a
        .regimes
        .iter()
        .map(|r| Regime::parse(r))
        .collect::<margin_scope::Result<Vec<_>>>()?;
    let mut cfg = SweepConfig::new(model_kind(a.model), a.n_list.clone(), parse_layers(&a.layer_list)?);
    cfg.repeats = a.repeats;
    cfg.entangler = entangler(a.entangler);
    cfg.train.max_iters = a.iters;
    cfg.train.step = a.step;
    cfg.bootstrap = a.bootstrap;
    cfg.regimes = regimes;
    let rows = moment_sweep(
        &cfg,
        &train_points,
        &test_points,
        &RandomStream::new(a.common.seed).named("sweep"),
    )?;
    let mut out = OutTarget::new(&a.common.out, "fig45.csv")?;
    let p = out.primary().to_path_buf();
    out.write(&p, |w| Ok(write_sweep_csv(&rows, a.common.seed, w)?))?;
    out.finish("sweep", a.common.seed, a, &[("optimizer", "adam".to_string())])
}

fn read_margins(path: &Path) -> CliResult<Vec<MarginSample>> {
    let bad = |msg: String| CliError::data("cli", format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| bad("no samples".into()))?;
    let headerless = first.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_ok());
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(!headerless)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let (iz, iid, iy, io) = if headerless {
        (0, None, None, None)
    } else {
        let h = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let find = |n: &str| h.iter().position(|c| c == n);
        (
            find("z").ok_or_else(|| bad("missing column `z`".into()))?,
            find("id"),
            find("y"),
            find("o"),
        )
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let z: f64 = field(iz)
            .parse()
            .map_err(|_| bad(format!("sample {}: bad margin", i + 1)))?;
        let id = match iid {
            Some(j) => field(j).parse().map_err(|_| bad(format!("sample {}: bad id", i + 1)))?,
            None => i as u64,
        };
        let y = match iy {
            Some(j) => field(j)
                .parse()
                .map_err(|_| bad(format!("sample {}: bad label", i + 1)))?,
            None => 0,
        };
        let o = match io {
            Some(j) => field(j)
                .parse()
                .map_err(|_| bad(format!("sample {}: bad expectation", i + 1)))?,
            None => f64::NAN,
        };
        out.push(MarginSample { id, y, o, z });
    }
    if out.is_empty() {
        return Err(bad("no samples".into()));
    }
    Ok(out)
}

fn margin_report(a: &MarginReportArgs) -> CliResult<()> {
    let samples = read_margins(&a.samples)?;
    let spec = MarginSpec::new(a.b, a.copies, a.delta)?;
    let z: Vec<f64> = samples.iter().map(|s| s.z).collect();
    let t_max = a.t_max.max(2);
    let mu1 = mean(&z);
    let centered = centered_moments(&z, t_max);
    let sigma2 = centered[1];
    let bounds = vec![
        chebyshev_failure_bound(mu1, sigma2, &spec)?,
        bernstein_bound(mu1, sigma2, bernstein_condition(&centered, sigma2, t_max)?, &spec)?,
        subgaussian_bound(mu1, subgaussian_condition(&centered, t_max)?, &spec)?,
    ];
    let failure = empirical_failure(
        &samples,
        &spec,
        a.trials,
        RandomStream::new(a.common.seed).named("shots"),
    )?;
    let mut out = OutTarget::new(&a.common.out, "report.csv")?;
    let p = out.primary().to_path_buf();
    out.write(&p, |w| Ok(write_bounds_csv(&bounds, w)?))?;
    let p = out.sibling("failure", "csv");
    out.write(&p, |w| Ok(write_failure_csv(&failure, w)?))?;
    out.finish("margin-report", a.common.seed, a, &[])
}

fn plot_cmd(a: &PlotArgs) -> CliResult<()> {
    let text =
        fs::read_to_string(&a.input).map_err(|e| CliError::data("plot", format!("{}: {e}", a.input.display())))?;
    let figure = match a.kind {
        PlotKind::Fig3 => plot::fig3(&text)?,
        PlotKind::Fig45 => plot::fig45(&text, &a.column)?,
    };
    let mut out = OutTarget::new(&a.common.out, "plot.svg")?;
    let p = out.primary().to_path_buf();
    let svg = figure.to_svg();
    out.write(&p, |w| {
        use std::io::Write;
        w.write_all(svg.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string()))
    })?;
    out.finish("plot", a.common.seed, a, &[])
}
