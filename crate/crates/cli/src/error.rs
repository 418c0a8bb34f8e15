//! CLI error type and exit-code mapping.

use std::fmt;
use std::path::Path;

use varcast_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown names, unwritable output.
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn output(path: &Path, e: std::io::Error) -> Self {
        Self::Usage(format!("cannot write {}: {e}", path.display()))
    }

    /// 2 usage/config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Core(e) if e.is_numerical() => 4,
            Self::Core(e) => match e {
                Error::Io { .. } | Error::EmptyFile { .. } | Error::InvalidParameter(_) => 2,
                Error::TaskFailed { .. } => 4,
                _ => 3,
            },
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Self::Core(Error::NotPositiveDefinite { .. } | Error::Singular { .. } | Error::ZeroVariance(_)) => {
                Some("check the input for constant or perfectly collinear columns, or lower --p")
            }
            Self::Core(Error::InsufficientData { .. }) => Some("use a longer series or a smaller --p / --p-max"),
            _ => None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => f.write_str(m),
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}
