use thiserror::Error;

use crate::solver::CapacitySolution;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("QAM order {0} must be a perfect square >= 4")]
    InvalidOrder(usize),

    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid PMF: {0}")]
    InvalidPmf(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("power constraint {e_bar} is below the minimum constellation energy {min_energy}")]
    Infeasible { e_bar: f64, min_energy: f64 },

    #[error(
        "solver stopped at KKT residual {residual:.3e} (target {tol:.3e}) within the iteration cap"
    )]
    NoConvergence {
        residual: f64,
        tol: f64,
        /// Best iterate reached before giving up.
        best: Box<CapacitySolution>,
    },

    #[error("capacity curve failed at grid index {index} (E = {energy}): {source}")]
    CurvePoint {
        index: usize,
        energy: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("traced capacity curve violates {0}")]
    CurveShape(String),

    #[error("block PMF would need {required} entries, above the cap of {cap}")]
    BlockTooLarge { required: u128, cap: u64 },

    #[error("exhaustive dyadic search bounds exceeded: m = {m} (max 8), max_len = {max_len} (max 10)")]
    SearchSpaceTooLarge { m: usize, max_len: u32 },

    #[error("codeword lengths do not satisfy Kraft equality: {0}")]
    NotFullCode(String),

    #[error("symbol {0} has no codeword in this prefix code")]
    InvalidSymbol(usize),

    #[error("grid point E = {0} is outside the sampled-Gaussian energy range ({1}, {2})")]
    InfeasibleGridPoint(f64, f64, f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
