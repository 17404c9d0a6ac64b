use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The Cayley solve left a residual above 1e-8. This is numerical
    /// breakdown; `I + iZ0 B` is never singular for real symmetric `B`.
    #[error("Cayley solve residual {residual:.3e} exceeds tolerance")]
    IllConditioned { residual: f64 },

    /// `I + Θ` has a singular value below 1e-10, so `Θ` has an eigenvalue
    /// close to -1 and no finite susceptance realizes it.
    #[error("I + theta is numerically singular (sigma_min = {sigma_min:.3e})")]
    SingularCayley { sigma_min: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The graph-constrained system has no solution to within tolerance.
    /// `conditioning` is sigma_min / sigma_max of the coefficient matrix.
    #[error("inconsistent system: relative residual {residual:.3e} (conditioning {conditioning:.3e})")]
    Inconsistent { residual: f64, conditioning: f64 },

    #[error("singular coefficient block at row block {block}")]
    SingularCoefficientBlock { block: usize },

    #[error("interference-plus-noise matrix of user {user} is not positive definite")]
    SingularInterference { user: usize },

    #[error("objective became non-finite")]
    NonFinite,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
