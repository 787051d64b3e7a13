//! Error type shared by every module of the library.

use thiserror::Error;

/// Library-wide error enumeration.
#[derive(Debug, Error)]
pub enum Error {
    /// Gamma function evaluated at a pole (zero or a negative integer).
    #[error("gamma pole: Gamma({x}) is undefined at nonpositive integers")]
    GammaPole { x: f64 },

    /// Fractional order outside the range a formula is valid for.
    #[error("invalid fractional order: {msg}")]
    InvalidOrder { msg: String },

    /// Grid construction or validation failure.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Quadrature window too narrow: the substituted integrand has not
    /// decayed below the convergence threshold at the window ends.
    #[error(
        "quadrature non-convergence: boundary integrand {boundary:.3e} exceeds \
         {threshold:.3e} relative to the current estimate"
    )]
    NonConvergent { boundary: f64, threshold: f64 },

    /// The t -> infinity tail of a semigroup integral does not converge
    /// (e.g. inverse operator with s >= n/2 on data with nonzero mean).
    #[error("divergent semigroup tail: {0}")]
    DivergentTail(String),

    /// Zero-mean hypothesis violated where the formula requires it.
    #[error("zero-mean violation: integral of f is {mean:.3e}, must vanish to {tol:.1e}")]
    ZeroMeanViolation { mean: f64, tol: f64 },

    /// A reported remainder bound exceeds the requested tolerance.
    #[error("remainder estimate {bound:.3e} exceeds requested tolerance {tol:.3e}")]
    RemainderTooLarge { bound: f64, tol: f64 },

    /// Richardson extrapolation toward y = 0 failed to settle.
    #[error("extrapolation divergence: residual {residual:.3e} exceeds 10% of value {value:.3e}")]
    ExtrapolationDiverged { residual: f64, value: f64 },

    /// Log-log slope fit rejected because the curve is not affine.
    #[error("fit residual too large: rms {rms:.3e} over the fitted window (limit {limit:.3e})")]
    FitResidualTooLarge { rms: f64, limit: f64 },

    /// Kernel evaluated at its singular point.
    #[error("kernel singularity at x = 0")]
    KernelSingularity,

    /// Operation not available for the given route/dimension combination.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Non-finite sample encountered where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Field file header failed validation on load.
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
