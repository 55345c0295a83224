//! Central-spin/spin-bath modelling with mean-field memory kernels, a
//! positivity-preserving synthetic kernel fitted by simulated annealing, and
//! exact truncated-basis reference dynamics.

pub mod bath_thermo;
pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod kernel_fit;
pub mod meanfield_kernel;
pub mod observables;
pub mod operator;
pub mod pauli;
pub mod rng;
pub mod sme_kernel;
pub mod spin_model;

pub use error::{Error, Result};
