use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A plant (or controller) mode in the closed right half-plane that no
    /// feedback can move.
    #[error("{}", fmt_assumption(.agent, .lambda, .detail))]
    Assumption {
        agent: Option<usize>,
        lambda: C64,
        detail: String,
    },

    #[error("ill-posed feedback loop: {0}")]
    IllPosed(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn fmt_assumption(agent: &Option<usize>, lambda: &C64, detail: &str) -> String {
    let who = match agent {
        Some(i) => format!("agent {}", i + 1),
        None => "system".to_string(),
    };
    format!(
        "{who} has a mode at {} that is {detail}",
        crate::linalg::fmt_complex(*lambda)
    )
}

impl Error {
    pub(crate) fn with_agent(self, index: usize) -> Self {
        match self {
            Error::Assumption { lambda, detail, .. } => Error::Assumption {
                agent: Some(index),
                lambda,
                detail,
            },
            other => other,
        }
    }
}
