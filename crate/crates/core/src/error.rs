use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The parameter point violates the admissibility conditions.
    #[error("invalid parameters: {0}")]
    Invalid(String),

    /// `b` sits on the Felli-Schneider curve, where `W` is degenerate.
    #[error("degenerate boundary: b = b_FS(a) = {b_fs} (|b - b_FS| = {distance:e})")]
    DegenerateBoundary { b_fs: f64, distance: f64 },

    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two cylinder functions live on different discretizations.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An iterative routine did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The function lies on the manifold of rescaled bubbles, so the quotient is undefined.
    #[error("function lies on the extremal manifold (dist^2 = {dist_sq:e}, ||v||^2 = {norm_sq:e})")]
    OnManifold { dist_sq: f64, norm_sq: f64 },

    /// The line search could not reduce the quotient from the starting iterate.
    #[error("no descent from the starting iterate (gradient norm {grad_norm:e})")]
    NoDescent { grad_norm: f64 },

    /// A configuration value is out of range.
    #[error("bad configuration: {0}")]
    Config(String),
}

impl Error {
    /// Whether the error is caused by the parameter point itself rather than by numerics.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_) | Error::DegenerateBoundary { .. } | Error::Domain(_) | Error::Config(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "Invalid",
            Error::DegenerateBoundary { .. } => "DegenerateBoundary",
            Error::Domain(_) => "Domain",
            Error::GridMismatch(_) => "GridMismatch",
            Error::Convergence(_) => "Convergence",
            Error::OnManifold { .. } => "OnManifold",
            Error::NoDescent { .. } => "NoDescent",
            Error::Config(_) => "Config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
