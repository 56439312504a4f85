//! Command-line driver: argument handling, configuration files, output
//! layout and provenance records around the `margin_scope` library.

mod args;
mod commands;
mod output;
pub mod plot;

use std::ffi::OsString;

use margin_scope::Error as CoreError;

pub use args::{expand_config, Cli};

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "MARGIN_SCOPE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{module}: bad input data: {msg}")]
    Data { module: &'static str, msg: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data { .. } => EXIT_DATA,
            CliError::Core(CoreError::ResourceCap { .. }) => EXIT_CAP,
            CliError::Core(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub(crate) fn data(module: &'static str, msg: impl Into<String>) -> Self {
        CliError::Data {
            module,
            msg: msg.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
    }
}

/// Runs the command line and returns the process exit status.
///
/// Help and usage errors are printed by the argument parser; every other
/// failure becomes a single `error:` line on stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match <Cli as clap::Parser>::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result =
        threads_from_env().and_then(|threads| margin_scope::par::with_threads(threads, || commands::dispatch(&cli)));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
