use diffstab_core::Error as CoreError;

/// Everything the front end reports, with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// Prefixes the message with the location it refers to.
    pub fn at(self, location: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{location}: {m}")),
            CliError::Invalid(m) => CliError::Invalid(format!("{location}: {m}")),
            CliError::Assumption(m) => CliError::Assumption(format!("{location}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{location}: {m}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Dimension(_) | CoreError::Domain(_) | CoreError::IllPosed(_) => {
                CliError::Invalid(e.to_string())
            }
            CoreError::Assumption { .. } => CliError::Assumption(e.to_string()),
            CoreError::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use diffstab_core::C64;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let assumption = CoreError::Assumption {
            agent: Some(1),
            lambda: C64::new(0.0, 0.0),
            detail: "uncontrollable".into(),
        };
        assert_eq!(CliError::from(assumption).exit_code(), 3);
        assert_eq!(
            CliError::from(CoreError::Numerical("x".into())).exit_code(),
            4
        );
        assert_eq!(
            CliError::from(CoreError::Dimension("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(CoreError::IllPosed("x".into())).exit_code(),
            2
        );
    }

    #[test]
    fn location_prefix_keeps_the_kind() {
        let e = CliError::Numerical("no convergence".into()).at("a.json");
        assert_eq!(e.exit_code(), 4);
        assert_eq!(e.to_string(), "numerical failure: a.json: no convergence");
    }
}
