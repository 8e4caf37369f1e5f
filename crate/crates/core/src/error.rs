use crate::LatticePoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid deformation parameter: {0}")]
    InvalidDeformation(String),

    #[error("q-number requested in classical mode; use the classical coefficient path")]
    ClassicalMode,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("argument is at a pole: product factor {index} vanishes")]
    Pole { index: usize },

    #[error("infinite product not converged after {terms} terms (tail bound {tail_bound:e})")]
    Truncation { terms: usize, tail_bound: f64 },

    #[error("weight {n} is not valid for a module with epsilon = {epsilon}")]
    InvalidWeight { n: i32, epsilon: u8 },

    #[error("invalid module parameters: {0}")]
    InvalidModule(String),

    #[error("near-singular reflection coefficient at n = {n}")]
    NearSingular { n: i32 },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("numerical breakdown in {equation} at (n, m) = ({}, {}): divisor {divisor:e}", .at.0, .at.1)]
    Breakdown {
        equation: &'static str,
        at: LatticePoint,
        divisor: f64,
    },

    #[error("invalid lattice window: {0}")]
    InvalidWindow(String),

    #[error("lattice point ({}, {}) has the wrong parity", .0.0, .0.1)]
    Parity(LatticePoint),

    #[error("SVD did not converge")]
    NoConvergence,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
