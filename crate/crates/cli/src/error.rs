use privcone::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 3 for internal limits, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::DomainTooLarge { .. }) => 3,
            _ => 2,
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        Some(match self {
            CliError::Core(e) => match e {
                CoreError::DomainTooLarge { .. } => {
                    "use fewer tuples or bits, or raise PRIVCONE_MAX_DIM"
                }
                CoreError::SingularAtHalf => "randomized response with p = 1/2 has no inverse; pick p != 1/2",
                CoreError::SingularMatrix => "the reference mechanism must be square and invertible",
                CoreError::WindowTooSmall { .. } => "increase --window or loosen --tolerance",
                CoreError::NotStochastic { .. } => "every column must be nonnegative and sum to exactly 1",
                CoreError::Parse(_) => "rationals are written as \"num/den\" strings",
                CoreError::DimensionMismatch { .. } => "both mechanisms must have the same input datasets",
                CoreError::NearSingularTransform { .. } => {
                    "the noise transform vanishes; this technique does not apply"
                }
                _ => return None,
            },
            CliError::Parse(_) => "files must be JSON objects with \"schema\": \"privcone/1\"",
            _ => return None,
        })
    }
}

pub fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}
