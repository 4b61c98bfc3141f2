use crate::linsolve::SolveReport;

#[derive(Debug, thiserror::Error)]
pub enum VemError {
    #[error("mesh parse error: {0}")]
    Parse(String),

    #[error("mesh validation error: {0}")]
    Validation(String),

    #[error("numerical degeneracy in {entity}: {detail}")]
    Degenerate { entity: String, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error(
        "solver did not converge after {} iterations (relative residual {:.3e})",
        .0.iterations,
        .0.relative_residual
    )]
    NotConverged(SolveReport),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;

impl VemError {
    pub(crate) fn degenerate(entity: impl Into<String>, detail: impl Into<String>) -> Self {
        VemError::Degenerate {
            entity: entity.into(),
            detail: detail.into(),
        }
    }
}
