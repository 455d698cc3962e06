//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M†| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    NoConvergence { sweeps: usize, offdiag: f64 },

    #[error("site index {site} out of range for {sites} sites (site 0 is the charger)")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("full product space limited to N <= {max} battery particles, got N = {n}")]
    DimensionGuard { n: usize, max: usize },

    #[error("steady state is degenerate: kernel dimension {dim} > 1")]
    DegenerateSteadyState { dim: usize },

    #[error("no steady state found: Liouvillian kernel is numerically empty")]
    NoSteadyState,

    #[error("closed forms are only available for N = 1, got N = {n}")]
    UnsupportedN { n: usize },

    #[error("parameter out of domain: {0}")]
    DomainError(String),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("stored energy is zero; charging efficiency undefined")]
    ZeroStoredEnergy,

    #[error("time step {dt:.3e} too large: must satisfy dt <= {max_dt:.3e}")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("evolution did not reach the steady state by t = {t_cap} (residual {residual:.3e})")]
    NotConverged { t_cap: f64, residual: f64 },

    #[error("state lost positivity: min eigenvalue {min_eig:.3e} (time step too large?)")]
    NonPhysicalState { min_eig: f64 },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("objective is flat over the search grid (max - min < 1e-12)")]
    FlatObjective,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
