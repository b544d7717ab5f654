use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficients are not normalizable: {0}")]
    NotNormalizable(String),

    #[error("matrix is not symmetric (max |V - V^T| = {0:e})")]
    AsymmetricMatrix(f64),

    #[error("invalid squeezing parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("inconsistent state: det A + det C - 1/4 = {residual:e}")]
    InconsistentState { residual: f64 },

    #[error("marginals differ (|A - B| = {0:e}); use solve_general for asymmetric states")]
    NotSymmetric(f64),

    #[error("degenerate phase: marginal is isotropic (|A - tr(A)/2 I| = {anisotropy:e}) but C is not in squeezed form (shape residual {shape:e})")]
    NumericDegeneracy { anisotropy: f64, shape: f64 },

    #[error("singular evolution: coefficient denominator {0:e}")]
    SingularEvolution(f64),

    #[error("solver failed after {starts} starts; best residual {best_residual:e}")]
    SolverFailure { starts: usize, best_residual: f64 },

    #[error("quadrature did not converge: entry ({row}, {col}) changed by {change:e} on refinement")]
    Precision { row: usize, col: usize, change: f64 },

    #[error("invalid evolution spec: {0}")]
    InvalidSpec(String),

    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_time(self, t: f64) -> Self {
        Error::AtTime { t, source: Box::new(self) }
    }
}
