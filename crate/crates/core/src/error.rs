use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("inclusion is not connected: {0}")]
    Connectedness(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("map is not scalar on a block: {0}")]
    NotScalar(String),
    #[error("could not resolve algebra structure: {0}")]
    Structure(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("trace is not Markov: {0}")]
    Markov(String),
    #[error("not in the normaliser: {0}")]
    Normaliser(String),
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("extraction failed: {0}")]
    Extraction(String),
    #[error("invalid colouring: {0}")]
    Colouring(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
