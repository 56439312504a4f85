use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "margin-scope",
    version,
    about = "Shadowed moments, margin bounds and classifier case studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Exact Haar moments of an observable spectrum, optionally against sampled states.
    HaarMoments(HaarMomentsArgs),
    /// Permuted-observable anti-randomness table for the toy ensemble.
    Toy(ToyArgs),
    /// Exhaustive discrete-log classifier report.
    Dlp(DlpArgs),
    /// Labelled two-dimensional datasets.
    Dataset {
        #[command(subcommand)]
        action: DatasetCommand,
    },
    /// Train one variational classifier.
    Train(TrainArgs),
    /// Margin moments over widths, depths and parameter regimes.
    Sweep(SweepArgs),
    /// Failure bounds and empirical failure of a margin sample file.
    MarginReport(MarginReportArgs),
    /// Render a CSV table as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand, Serialize)]
pub enum DatasetCommand {
    /// Generate train and test splits.
    Gen(DatasetArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Global seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (`.csv`, `.json`, `.svg`) or directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Real,
    Complex,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct HaarMomentsArgs {
    /// Distinct eigenvalues.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of each eigenvalue (default 1 each).
    #[arg(long, value_delimiter = ',')]
    pub multiplicities: Vec<u64>,
    /// Use a rank-r projector on n qubits instead of explicit eigenvalues.
    #[arg(long)]
    pub projector_rank: Option<u64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 4)]
    pub t_max: u32,
    #[arg(long, value_enum, default_value_t = Convention::Real)]
    pub convention: Convention,
    /// Haar states to sample for a Monte-Carlo comparison (0 = none).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.07)]
    pub epsilon: f64,
    /// Compare raw moments at every order.
    #[arg(long)]
    pub raw_only: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 9)]
    pub n: u32,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 6)]
    pub t_max: u32,
    /// Transposition counts.
    #[arg(long, value_delimiter = ',', default_value = "0,1,5,15")]
    pub perms: Vec<usize>,
    /// Permuted observables per transposition count (default 2n).
    #[arg(long)]
    pub perm_samples: Option<usize>,
    #[arg(long, default_value_t = 0.07)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DlpArgs {
    #[arg(long)]
    pub p: u64,
    /// Generator, or `auto` for the smallest one.
    #[arg(long, default_value = "auto")]
    pub g: String,
    #[arg(long)]
    pub k_exp: u32,
    #[arg(long, default_value_t = 1)]
    pub s: u64,
    /// Copies per classification (M).
    #[arg(long, default_value_t = 2000)]
    pub copies: u64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Simulated classifications per element.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DatasetArgs {
    /// Training grid side; the grid has side² points.
    #[arg(long, default_value_t = 24)]
    pub grid: usize,
    /// Uniform test points.
    #[arg(long, default_value_t = 500)]
    pub test: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    FeatureBrick,
    FeatureNonbrick,
    Reupload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglerArg {
    Ring,
    Chain,
    None,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Training CSV (`x1,x2,y`).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    /// Entangler of the re-uploading model.
    #[arg(long, value_enum, default_value_t = EntanglerArg::Ring)]
    pub entangler: EntanglerArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub n_list: Vec<usize>,
    /// Comma list or inclusive range `a:b`.
    #[arg(long, default_value = "1:10")]
    pub layer_list: String,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', default_value = "train,test,random")]
    pub regimes: Vec<String>,
    /// Dataset CSV with a `<stem>_test.csv` companion; generated from the
    /// seed when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub test: usize,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, value_enum, default_value_t = EntanglerArg::Ring)]
    pub entangler: EntanglerArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct MarginReportArgs {
    /// Margin CSV: a `z` column (optionally with `id,y,o`) or bare values.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long = "M", default_value_t = 1000)]
    pub copies: u64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Highest moment order for the growth-constant checks.
    #[arg(long, default_value_t = 6)]
    pub t_max: usize,
    /// Simulated classifications per sample.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// `t,perm_count,A_t_normalized,std_error,...`: one series per count.
    Fig3,
    /// Sweep table: one series per (model, n, regime) against L.
    Fig45,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Sweep column to plot.
    #[arg(long, default_value = "mu1_minus_half")]
    pub column: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn config_tokens(path: &str) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed config {path}: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::Usage(format!("config {path} must be a JSON object")))?;
    let mut out = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &serde_json::Value| -> CliResult<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(CliError::Usage(format!("config key `{key}` has an unsupported value"))),
            }
        };
        match value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<CliResult<Vec<_>>>()?;
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            v => out.push(format!("{flag}={}", scalar(v)?).into()),
        }
    }
    Ok(out)
}

/// Replaces `--config FILE` by the flags it holds, placed directly after the
/// subcommand so that explicit flags later on the line override them.
pub fn expand_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let v = it
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            config = Some(v.to_string_lossy().into_owned());
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let tokens = config_tokens(&path)?;
    // Program name, then the subcommand (two words for `dataset gen`).
    let mut at = 1;
    if let Some(first) = rest.get(1) {
        at = 2;
        if first == "dataset" && rest.get(2).is_some_and(|s| !s.to_string_lossy().starts_with('-')) {
            at = 3;
        }
    }
    let at = at.min(rest.len());
    rest.splice(at..at, tokens);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_go_before_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"n": 5, "perms": [0, 1], "seed": 3}"#).unwrap();
        let argv = os(&["m", "toy", "--config", cfg.to_str().unwrap(), "--n", "7"]);
        let out = expand_config(argv).unwrap();
        // serde_json orders object keys alphabetically.
        assert_eq!(out, os(&["m", "toy", "--n=5", "--perms=0,1", "--seed=3", "--n", "7"]));
        let cli = <Cli as Parser>::try_parse_from(&out).unwrap();
        let Command::Toy(a) = cli.command else { panic!() };
        assert_eq!((a.n, a.common.seed, a.perms.clone()), (7, 3, vec![0, 1]));
    }

    #[test]
    fn dataset_subcommand_is_two_words() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"grid": 4}"#).unwrap();
        let argv = os(&["m", "dataset", "gen", "--config", cfg.to_str().unwrap()]);
        assert_eq!(expand_config(argv).unwrap(), os(&["m", "dataset", "gen", "--grid=4"]));
    }

    #[test]
    fn malformed_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, "[1, 2").unwrap();
        let err = expand_config(os(&["m", "toy", "--config", cfg.to_str().unwrap()])).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
