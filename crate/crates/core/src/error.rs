use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. Each variant names the module it came from so
/// the command line can surface it without extra context.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid input: {msg}")]
    InvalidInput { module: &'static str, msg: String },

    #[error("{module}: resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    ResourceCap {
        module: &'static str,
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("{module}: infeasible: {msg}")]
    Infeasible { module: &'static str, msg: String },

    #[error("{module}: unsupported: {msg}")]
    Unsupported { module: &'static str, msg: String },

    #[error("{module}: i/o error: {source}")]
    Io {
        module: &'static str,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidInput {
            module,
            msg: msg.into(),
        }
    }

    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidInput { module, .. }
            | Error::ResourceCap { module, .. }
            | Error::Infeasible { module, .. }
            | Error::Unsupported { module, .. }
            | Error::Io { module, .. } => module,
        }
    }
}
