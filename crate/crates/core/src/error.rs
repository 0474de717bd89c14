use thiserror::Error;

/// Errors raised by the tomography engine and the optics compiler.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid qudit dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("setting ({l}, {m}) out of range for d = {d}")]
    SettingOutOfRange { d: usize, l: usize, m: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max |A - A^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (sum |a_i|^2 = {0})")]
    NotNormalized(f64),

    #[error("operator is not unitary (max |U^dag U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("OAM value {value} shifted by {shift} leaves the window [0, {window})")]
    OutOfWindow {
        value: i64,
        shift: i64,
        window: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
