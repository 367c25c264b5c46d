use thiserror::Error;

/// Errors produced by state algebra, channel construction and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid partition cut {cut} for {parts} subsystem(s)")]
    InvalidPartition { cut: usize, parts: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("decay rate pole at t = {pole:.12e}, requested t = {t:.12e}")]
    RatePole { t: f64, pole: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fresh environment qubits exhausted: {needed} step(s) requested, {available} available")]
    FreshQubitsExhausted { needed: usize, available: usize },

    #[error("measure result carries no extremal probe state")]
    MissingExtremalState,
}

pub type Result<T> = std::result::Result<T, Error>;
