use thiserror::Error;

use crate::group::GroupError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no regeneration cycles: the anchor state never occurs among confirmed exits")]
    NoRegenerations,
    #[error("regime error: {0}")]
    Regime(String),
    #[error("zero hit estimate: {0}")]
    ZeroHitEstimate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
