use thiserror::Error;

use crate::semiclassical::ValidityReport;

pub type Result<T> = std::result::Result<T, FwError>;

#[derive(Debug, Clone, Error)]
pub enum FwError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    /// Principal square root undefined: some eigenvalue has non-positive real part.
    #[error("square root undefined: {0}")]
    SingularSqrt(String),

    #[error("commuting-case preconditions violated: {0}")]
    NotExactCase(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The spectrum of H comes within the gap tolerance of zero; the sign function is undefined.
    #[error("spectral gap closed: {0}")]
    GapClosure(String),

    #[error("inconsistent field: {message} (max deviation {max_deviation:.3e} at r = {location:?})")]
    FieldConsistency {
        message: String,
        max_deviation: f64,
        location: [f64; 3],
    },

    #[error("field evaluated outside its domain at r = {0:?}")]
    FieldDomain([f64; 3]),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    /// Semiclassical validity condition violated and no override given.
    #[error("semiclassical validity violated: lambda/l = {:.4} > {:.4}", .0.lambda_over_l, .0.threshold)]
    Validity(ValidityReport),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o: {0}")]
    Io(String),
}
