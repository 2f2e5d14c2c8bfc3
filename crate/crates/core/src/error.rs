use thiserror::Error;

/// Errors produced by the geodesic, bounds and nilpotent-approximation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveEps(f64),

    #[error("evaluation at a pole of g (argument {0})")]
    PoleError(f64),

    #[error("I(y) is singular at y = {0}")]
    SingularI(f64),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("horizontal part of the point vanishes")]
    ZeroHorizontal,

    #[error("the point is the origin")]
    OriginPoint,

    #[error("every block of the point vanishes")]
    AllBlocksZero,

    #[error("covectors do not share an endpoint (distance {0:e})")]
    EndpointMismatch(f64),

    #[error("grid step {step:e} too coarse for pole spacing {gap:e}")]
    StepTooCoarse { step: f64, gap: f64 },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("structure matrix is not contact (smallest singular value {0:e})")]
    NotContact(f64),

    #[error("structure matrix skewness defect {0:e} exceeds tolerance")]
    ExcessiveSkewDefect(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
