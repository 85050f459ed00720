use thiserror::Error;

/// Errors raised by the geometry engine and the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// An operation was called outside the set where it is defined, e.g. a
    /// derivative of the norm at the zero vector.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {msg}")]
    Numeric { msg: String, best: Option<f64> },

    #[error("fundamental tensor not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    ConvexityViolation { min_eigenvalue: f64 },

    #[error("largest Christoffel eigenvalue not separated (margin {margin:e} along {direction:?})")]
    SeparationViolation { margin: f64, direction: Vec<f64> },

    #[error("integration step failure at t = {t}: relative speed drift {drift:e}")]
    StepFailure { t: f64, drift: f64 },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("no coordinate chart found (best normalized |det| = {best_det:e})")]
    ChartFailure { best_det: f64 },

    #[error("only {found} certified covectors, at least {needed} required")]
    InsufficientCone { found: usize, needed: usize },

    #[error("construction impossible: {0}")]
    ConstructionImpossible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numeric(msg: impl Into<String>, best: Option<f64>) -> Self {
        Error::Numeric {
            msg: msg.into(),
            best,
        }
    }
}
