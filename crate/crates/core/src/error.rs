use std::path::PathBuf;

/// Errors raised across the forecasting pipeline.
///
/// The split mirrors how callers react: `Contract` is a caller bug,
/// `Domain` means the data cannot support the requested computation,
/// `Config` is a bad parameter or missing setting.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{module}: contract violation: {message}")]
    Contract { module: &'static str, message: String },

    #[error("{module}: domain error: {message}")]
    Domain { module: &'static str, message: String },

    #[error("{module}: configuration error in `{field}`: {message}")]
    Config {
        module: &'static str,
        field: String,
        message: String,
    },

    #[error("{module}: failed to parse {what}: {message}")]
    Parse {
        module: &'static str,
        what: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn contract(module: &'static str, message: impl Into<String>) -> Self {
        Error::Contract {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn config(
        module: &'static str,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Config {
            module,
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(
        module: &'static str,
        what: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            module,
            what: what.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the module that raised the error, if any.
    pub fn module(&self) -> Option<&'static str> {
        match self {
            Error::Contract { module, .. }
            | Error::Domain { module, .. }
            | Error::Config { module, .. }
            | Error::Parse { module, .. } => Some(module),
            Error::Io { .. } => None,
        }
    }
}
