use thiserror::Error;

/// Exit codes: 0 success, 2 config error, 3 certificate failure,
/// 4 resource truncation.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("family member {0}: {1}")]
    Member(usize, nilflow::Error),
    #[error(transparent)]
    Core(#[from] nilflow::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use nilflow::Error as E;
        match self {
            CliError::Config(_) | CliError::Member(..) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::DescentViolation { .. } | E::ImproperVariety(_) => 3,
                E::Truncated { .. } | E::FamilyTooLarge { .. } | E::AttemptsExhausted(_) | E::DifferencingCap(_) => 4,
                _ => 2,
            },
        }
    }
}
