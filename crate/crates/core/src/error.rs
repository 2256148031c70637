use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid parameter `{param}` = {value}: {reason}")]
    InvalidParameter {
        param: String,
        value: f64,
        reason: String,
    },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("could not bracket the root: {0}")]
    Bracket(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("reflected region empty for cube {0}")]
    EmptyReflection(String),

    #[error("doubling constant is infinite; {0} requires a doubling Young function")]
    NotDoubling(&'static str),

    #[error("condition C_beta is infinite; {0} requires a finite C_beta")]
    InfiniteCBeta(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(param: &str, value: f64, reason: &str) -> Error {
    Error::InvalidParameter {
        param: param.to_string(),
        value,
        reason: reason.to_string(),
    }
}
