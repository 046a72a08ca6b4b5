use thiserror::Error;

/// Errors raised by constructors, loaders and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parameter out of range: {0}")]
    Param(String),

    #[error("need at least two distinct radii below the horizon {horizon}, found {found}")]
    DegenerateGrid { horizon: f64, found: usize },

    #[error("ball centered at {center} with radius {radius} is empty")]
    EmptyBall { center: usize, radius: f64 },

    #[error("first set is not contained in the second (point {0} is outside)")]
    NotSubset(usize),

    #[error("empty annulus: inner and outer balls coincide as point sets")]
    EmptyAnnulus,

    #[error("singular domain: component containing point {0} has no coupling to its complement")]
    SingularDomain(usize),

    #[error("function is not f-superharmonic in the domain (worst slack {0:e} at point {1})")]
    NotSuperharmonic(f64, usize),

    #[error("function is negative at point {0} inside the domain")]
    NegativeInDomain(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
