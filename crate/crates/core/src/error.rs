use thiserror::Error;

/// Errors raised by the numerical substrate and the modules built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("slow diffusion only: p must exceed 2 (got {0})")]
    NotSlowDiffusion(f64),
    #[error("unsupported spatial dimension n = {0}")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point ({x:?}, t = {t}) lies outside the field domain")]
    OutsideDomain { x: Vec<f64>, t: f64 },
    #[error("stencil touches a numerically infinite or undefined sample")]
    NonFiniteStencil,
    #[error("empty integration region")]
    EmptyRegion,
    #[error("grid specifications do not match")]
    SpecMismatch,
    #[error("negative sample {value} at t = {t}: extension to the past needs a nonnegative field")]
    NegativeSample { value: f64, t: f64 },
    #[error("iteration did not converge after {iterations} steps (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("inner iteration diverged at time level {level}; residual history {history:?}")]
    InnerDivergence { level: usize, history: Vec<f64> },
    #[error("shooting bracket not found: {0}")]
    BracketNotFound(String),
    #[error("degenerate denominator: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
