//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("lattice of radius {radius} has only {available} nonzero sites, {requested} requested")]
    LatticeTooSmall {
        radius: i32,
        available: usize,
        requested: usize,
    },

    #[error("bath spins {0} and {1} occupy the same site")]
    CoincidentSites(usize, usize),

    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("square root of non-positive normalizer product in channel {channel}: {value:.6e}")]
    ChannelNormalizer { channel: usize, value: f64 },

    #[error("W({alpha}, {beta}, {t}) failed: {reason} (terms {terms}, partial sum {partial:.6e}, last term {last:.3e})")]
    WSeries {
        alpha: f64,
        beta: f64,
        t: f64,
        reason: String,
        terms: usize,
        partial: f64,
        last: f64,
    },

    #[error("cubic has repeated roots (separation {0:.3e}); perturb the kernel parameters")]
    RepeatedRoots(f64),

    #[error("kernel constraint failed: {0}")]
    Constraint(String),

    #[error("equilibrium projection ambiguous: degenerate spectrum (gap {0:.3e})")]
    DegenerateSpectrum(f64),

    #[error("singular linear system")]
    Singular,

    #[error("integrator step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no feasible point found after {0} samples")]
    NoFeasiblePoint(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
