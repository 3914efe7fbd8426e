use std::fmt;

/// Exit status 2 for anything caught before computing, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    /// Malformed flags, config files or output locations.
    Usage(String),
    /// A library precondition, reported with the check it mirrors.
    Precondition {
        check: &'static str,
        source: logistic_rds::Error,
    },
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Precondition { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Tags a library error raised while validating with the check it came from.
pub fn precondition(check: &'static str) -> impl Fn(logistic_rds::Error) -> CliError {
    move |source| {
        if source.is_precondition() {
            CliError::Precondition { check, source }
        } else {
            CliError::Runtime(source.to_string())
        }
    }
}

impl From<logistic_rds::Error> for CliError {
    fn from(e: logistic_rds::Error) -> Self {
        precondition("library")(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Precondition { check, source } => {
                write!(f, "precondition `{check}` violated: {source}")
            }
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}
