use thiserror::Error;

/// Errors shared across the calculus modules.
#[derive(Debug, Error)]
pub enum SgError {
    #[error("scaling limit did not converge: {0}")]
    NonConvergent(String),
    #[error("component degrees must strictly decrease")]
    DegreeOrderViolation,
    #[error("principal triple fails corner compatibility: residual {0}")]
    IncompatibleTriple(f64),
    #[error("symbol is not elliptic (margin {0})")]
    NotElliptic(f64),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("sample ({0}, {1}) outside the inner half of the grid")]
    SampleOutOfRange(f64, f64),
    #[error("closedness relations violated: residual {0}")]
    NotClosed(f64),
    #[error("generating-function gradient relations violated: residual {0}")]
    GradientMismatch(f64),
    #[error("radial limit not direction-independent: spread {0}")]
    NotRadiallyConvergent(f64),
    #[error("section not positive on samples: min {0}")]
    DegenerateSection(f64),
    #[error("phase cancellation hypothesis fails: residual {0}")]
    PhaseMismatch(f64),
    #[error("cannot invert compactification at a boundary point")]
    BoundaryPoint,
    #[error("closed-form expression required: {0}")]
    ClosedFormRequired(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, SgError>;
