use thiserror::Error;

/// Errors surfaced by the numerical kernels.
///
/// Every variant carries enough context (time, location, residual) for a caller
/// to report which particle and which stage of a run failed.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("point left the legal chart region of {chart} at t = {t}: x = {x:?}")]
    ChartBoundary { chart: String, t: f64, x: Vec<f64> },

    #[error("matrix is not symmetric positive definite ({context})")]
    NotSpd { context: String },

    #[error("finite-difference step {step} exceeds the chart margin {margin}")]
    StepTooLarge { step: f64, margin: f64 },

    #[error("time grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("caustic reached at t = {t} (log det B = {logdet:.3e})")]
    CausticReached { t: f64, logdet: f64 },

    #[error("matrix Riccati residual {residual:.3e} exceeds {tol:.1e} at t = {t}")]
    ResidualBreach { t: f64, residual: f64, tol: f64 },

    #[error("curvature matrix symmetry breach: |R - R^T| = {residual:.3e}")]
    SymmetryBreach { residual: f64 },

    #[error("hamiltonian is not positively homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("operation {op} is not available for this hamiltonian kind")]
    UnsupportedKind { op: String },

    #[error("measure requires Hamilton-Jacobi state (u values) that was not supplied")]
    MissingHjState,

    #[error("non-positive density: {0}")]
    NonPositiveDensity(String),

    #[error("constraint violation: {name} residual {residual:.3e} exceeds {tol:.1e}")]
    ConstraintViolation { name: String, residual: f64, tol: f64 },

    #[error("step count {found} below minimum {min}")]
    StepCount { found: usize, min: usize },

    #[error("expression error: {0}")]
    Expr(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("particle {index}: {source}")]
    Particle {
        index: usize,
        #[source]
        source: Box<CoreError>,
    },
}

impl CoreError {
    /// Tags an error with the particle it came from.
    pub fn for_particle(self, index: usize) -> CoreError {
        CoreError::Particle { index, source: Box::new(self) }
    }

    /// Strips particle context, exposing the underlying failure.
    pub fn root(&self) -> &CoreError {
        match self {
            CoreError::Particle { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
