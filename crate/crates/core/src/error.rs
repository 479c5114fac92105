use thiserror::Error;

use crate::principalize::TowerTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("variable count mismatch: {0} vs {1}")]
    VariableCountMismatch(usize, usize),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("invalid placement order: {0}")]
    InvalidOrder(String),

    #[error("cell classification failed: {0}")]
    Classification(String),

    #[error("linear form has non-unit constant term {0}")]
    NonUnitConstant(String),

    #[error("blow-up center ({0}, {1}) is an empty intersection")]
    EmptyCenter(String, String),

    #[error("class lives at level {found}, expected level {expected}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("no admissible codimension-2 center at level {0}")]
    NoAdmissibleCenter(usize),

    #[error("tower did not reach a divisor within {} blow-ups", .0.iterations_used)]
    TowerDivergence(Box<TowerTrace>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
