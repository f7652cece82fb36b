use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied value is out of range; `field` names the offending key.
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("sample count {samples} aliases modes up to {order}: need at least {needed} samples")]
    Aliasing {
        samples: usize,
        order: usize,
        needed: usize,
    },

    #[error("function declared real has a Hermitian-symmetry defect of {defect:e}")]
    NotReal { defect: f64 },

    #[error("eigenvalue cluster {indices:?} has {} members (at most 3 allowed)", indices.len())]
    ClusterTooLarge { indices: Vec<i64> },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("initial and target means differ: [u0] = {mean0}, [u1] = {mean1}")]
    MeanMismatch { mean0: String, mean1: String },

    #[error(
        "Gram matrix of exponentials is numerically singular (cond ≈ {cond:e}); \
         closest eigenvalue pair λ = {lambda_a} and λ = {lambda_b}"
    )]
    GramSingular {
        cond: f64,
        lambda_a: f64,
        lambda_b: f64,
    },

    #[error("cluster block {indices:?} of the m-matrix is singular")]
    SingularClusterBlock { indices: Vec<i64> },

    #[error("observability failure: {0}")]
    Observability(String),

    #[error("need at least {needed} samples above the noise floor, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("scenario parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Toml(_)
            | Error::MeanMismatch { .. }
            | Error::NotReal { .. }
            | Error::Aliasing { .. } => 2,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
