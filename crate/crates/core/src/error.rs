use thiserror::Error;

/// Errors surfaced by the laboratory. Each variant names the module-level
/// precondition or numerical failure that produced it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("unknown weight family `{0}`")]
    UnknownFamily(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("horizon {requested} exceeds the largest representable index {max_index}")]
    HorizonOverflow { requested: usize, max_index: u64 },

    #[error("horizon mismatch: requested {requested}, memoized {available}")]
    HorizonMismatch { requested: usize, available: usize },

    #[error("tail supremum is not determinable for this weight: {0}")]
    TailUndetermined(String),

    #[error("quadrature did not converge: estimated error {estimate:e} above tolerance {tol:e}")]
    QuadratureFailed { estimate: f64, tol: f64 },

    #[error("evaluation at the essential singularity z = 1")]
    EssentialSingularity,

    #[error("no interior critical point: m/n = {ratio} outside ({lo}, {hi})")]
    NoCriticalPoint { ratio: f64, lo: f64, hi: f64 },

    #[error("dynamic range failure: r^-M overflows at radius {radius} for M = {truncation}")]
    DynamicRange { radius: f64, truncation: usize },

    #[error("tail certificate unavailable: {0}")]
    NoTailCertificate(String),

    #[error("catastrophic cancellation at {count} entries (max relative disagreement {worst:e})")]
    Cancellation { count: usize, worst: f64 },

    #[error("bound inapplicable: {0}")]
    BoundInapplicable(String),

    #[error("stationary-phase hypotheses violated: {0}")]
    HypothesisViolated(String),

    #[error("derivative of the phase vanishes on the interval")]
    VanishingDerivative,

    #[error(
        "column accuracy insufficient: truncation error {trunc_error:e} vs threshold {threshold:e}"
    )]
    InsufficientAccuracy { trunc_error: f64, threshold: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("kernel series not summable within horizon {horizon}")]
    KernelDivergent { horizon: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("sequence is not non-decreasing at index {0}")]
    NotNonDecreasing(usize),

    #[error("slow-oscillation profile is degenerate: {0}")]
    DegenerateProfile(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed data: {0}")]
    Format(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> LabError {
    LabError::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
