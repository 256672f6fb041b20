use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Every variant maps to a stable machine-readable code (see [`Error::code`])
/// and to one of two failure classes: bad input parameters or numerical /
/// resource trouble during a run.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("all couplings vanish; the hub is decoupled, use the exact diagonalization instead")]
    DegenerateNetwork,

    #[error("perturbative mode analysis is inapplicable: {0}")]
    PerturbationInapplicable(String),

    #[error("unstable network: {0}")]
    Unstable(String),

    #[error("eigendecomposition did not converge: {0}")]
    NonConvergence(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("integration accuracy lost: {0}")]
    IntegrationAccuracy(String),

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn parameter(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Stable identifier written into run reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Domain(_) => "domain",
            Error::DegenerateNetwork => "degenerate_network",
            Error::PerturbationInapplicable(_) => "perturbation_inapplicable",
            Error::Unstable(_) => "unstable",
            Error::NonConvergence(_) => "non_convergence",
            Error::Contract(_) => "contract",
            Error::Resource(_) => "resource",
            Error::IntegrationAccuracy(_) => "integration_accuracy",
            Error::Diagnostics(_) => "diagnostics",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Io(_) => "io",
        }
    }

    /// True when the failure is caused by the caller's parameters rather
    /// than by the numerics.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. } | Error::Domain(_) | Error::DegenerateNetwork
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
