use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("truncation overflow at kick {kick}: edge-band population {population:.3e} on {sites} sites")]
    TruncationOverflow {
        kick: u32,
        population: f64,
        sites: usize,
    },

    #[error("record times must be strictly increasing and lie in [0, {n_kicks}]")]
    InvalidRecordTimes { n_kicks: u32 },

    #[error("insufficient growth: <p^2> grew by a factor {ratio:.3} (< 10) over the run")]
    InsufficientGrowth { ratio: f64 },

    #[error("realization series have mismatched record times")]
    MismatchedTimes,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("zero population: Pi0 = {value:.3e} at t = {t}")]
    ZeroPopulation { t: u32, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no points in the analysis window")]
    EmptyWindow,

    #[error("fit window needs at least 5 points spanning half a decade (got {points} points over {decades:.2} decades)")]
    InsufficientSpan { points: usize, decades: f64 },

    #[error("curves for K = {k_a} and K = {k_b} share no ln(Lambda) range")]
    NoOverlap { k_a: f64, k_b: f64 },

    #[error("branch {0} has fewer than two curves")]
    DegenerateBranch(&'static str),

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("ill-conditioned fit: condition number {condition:.3e}")]
    IllConditioned { condition: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
