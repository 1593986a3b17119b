use thiserror::Error;

/// Errors raised by the geometric computations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FinslerError {
    #[error("point {point:?} lies outside the metric domain")]
    Domain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("strong convexity violated: {0}")]
    Convexity(String),

    #[error("accuracy target missed for {what}: achieved {achieved:e}")]
    Accuracy { what: String, achieved: f64 },

    #[error("step size underflow at parameter {at}")]
    Stiffness { at: f64 },

    #[error("no connecting geodesic found, best miss distance {miss:e}")]
    Connectivity { miss: f64 },

    #[error("metrics are not projectively related here, fit residual {residual:e}")]
    NotProjective { residual: f64 },

    #[error("pole of Mobius map at {at}")]
    Pole { at: f64 },

    #[error("derivative vanishes at critical point {at}")]
    CriticalPoint { at: f64 },

    #[error("parameter chart error: {0}")]
    Chart(String),

    #[error("no admissible chart: attainable parameter range ({lo}, {hi})")]
    InadmissibleChart { lo: f64, hi: f64 },

    #[error("hypothesis not satisfied: {0}")]
    HypothesisNotSatisfied(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl FinslerError {
    /// Stable short identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            FinslerError::Domain { .. } => "domain",
            FinslerError::Dimension { .. } => "dimension",
            FinslerError::Construction(_) => "construction",
            FinslerError::Convexity(_) => "convexity",
            FinslerError::Accuracy { .. } => "accuracy",
            FinslerError::Stiffness { .. } => "stiffness",
            FinslerError::Connectivity { .. } => "connectivity",
            FinslerError::NotProjective { .. } => "not-projective",
            FinslerError::Pole { .. } => "pole",
            FinslerError::CriticalPoint { .. } => "critical-point",
            FinslerError::Chart(_) => "chart",
            FinslerError::InadmissibleChart { .. } => "inadmissible-chart",
            FinslerError::HypothesisNotSatisfied(_) => "hypothesis-not-satisfied",
            FinslerError::InvalidArgument(_) => "invalid-argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
