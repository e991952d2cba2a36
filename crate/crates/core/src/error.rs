use thiserror::Error;

pub type Result<T> = std::result::Result<T, BgkError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BgkError {
    #[error("unsupported dimension {0}; only n = 2 and n = 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("domain is not star-shaped with respect to the center ball: segment from {y:?} to {z:?} leaves it")]
    StarShapeViolation { y: Vec<f64>, z: Vec<f64> },

    #[error("kernel diagonal: x and y coincide")]
    KernelDiagonal,

    #[error("zero vector passed where a direction is required")]
    ZeroDirection,

    #[error("non-finite integrand value {value} at {location}")]
    NonFinite { value: f64, location: f64 },

    #[error("field value {value} at {point:?} is not finite")]
    NonFiniteField { value: f64, point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cutoff reaches boundary: 2*epsilon = {two_eps} exceeds distance {dist} to the boundary")]
    CutoffReachesBoundary { two_eps: f64, dist: f64 },

    #[error("compatibility condition violated: integral of F is {0}")]
    CompatibilityViolated(f64),

    #[error("field evaluation failed: {0}")]
    Field(String),
}
