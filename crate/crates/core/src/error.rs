use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("form degree {degree} exceeds dimension {n}")]
    DegreeOverflow { degree: usize, n: usize },
    #[error("cannot lower degree-0 form")]
    DegreeUnderflow,
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("point with |z| = {norm} lies outside the validity radius {radius}")]
    Domain { norm: f64, radius: f64 },
    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),
    #[error("every eigenvalue lies below the zero tolerance")]
    DegenerateSpectrum,
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
