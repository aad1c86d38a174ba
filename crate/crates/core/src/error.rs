use thiserror::Error;

/// Errors raised by model construction, the spectral machinery and the simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown operator kind `{0}`")]
    UnknownKind(String),

    #[error("invalid operator parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("numerically singular system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("power norm overflowed to +inf at n = {0}")]
    NormOverflow(usize),

    #[error("eigenvalue solver failed to converge")]
    EigenFailure,

    #[error("spectrum meets the unit circle (distance {distance:.3e}, eigenvalue {eigenvalue})")]
    NotHyperbolic {
        distance: f64,
        eigenvalue: num_complex::Complex64,
    },

    #[error("quadrature did not converge: residual {residual:.3e} with {n_quad} nodes")]
    QuadratureNonConvergence { residual: f64, n_quad: usize },

    #[error("ambiguous projector rank: singular value {0:.3e} inside the (1e-8, 1e-6) band")]
    RankAmbiguity(f64),

    #[error("invalid Laurent index range [{k_min}, {k_max}] for {n_quad} quadrature nodes")]
    InvalidRange {
        k_min: i64,
        k_max: i64,
        n_quad: usize,
    },

    #[error("noise window [{have_start}, {have_end}] does not cover [{need_start}, {need_end}]")]
    InsufficientWindow {
        need_start: i64,
        need_end: i64,
        have_start: i64,
        have_end: i64,
    },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("argument {value} below the range of the inverse gamma function (minimum {min})")]
    BelowRange { value: f64, min: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
