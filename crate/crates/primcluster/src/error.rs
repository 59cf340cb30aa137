//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures surfaced by geometry construction, implicitization, calibration
/// and clustering. Scalar payloads are reported as `f64` regardless of the
/// instantiated precision.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter {param:?} lies outside the patch domain {domain:?}")]
    ParamOutsideDomain { param: Vec<f64>, domain: Vec<(f64, f64)> },

    #[error("affine transform is numerically singular (|det| = {det:e})")]
    SingularTransform { det: f64 },

    #[error("{actual} samples are insufficient for implicit degree {degree}; at least {required} are required")]
    InsufficientSamples { degree: usize, required: usize, actual: usize },

    #[error("implicit degree {degree} is unsupported for {param_dim}-parameter patches: {reason}")]
    UnsupportedDegree { degree: usize, param_dim: usize, reason: String },

    #[error(
        "no implicit degree up to {m_cap} fits the cloud; smallest singular values per degree: {sigmas:?}"
    )]
    DegreeOverflow { m_cap: usize, sigmas: Vec<f64> },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("all cluster centers of mass coincide; lambda_star is undefined")]
    CoincidentCenters,

    #[error("calibration produced no usable training sample: {0}")]
    DegenerateCalibration(String),

    #[error("dataset schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Builds `InvalidInput` from anything displayable.
    pub fn invalid(msg: impl std::fmt::Display) -> Self {
        Error::InvalidInput(msg.to_string())
    }
}
