use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock space: dimension {0} (need at least 2)")]
    InvalidSpace(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),

    #[error("Hamiltonian does not commute with parity (relative defect {0:.3e})")]
    ParityBroken(f64),

    #[error("ill-conditioned spectrum: {0}")]
    IllConditioned(String),

    #[error("no robust point in (0, K) for alpha^2 = {alpha2}")]
    NoRobustPoint { alpha2: f64 },

    #[error("Fock truncation {dim} too small for alpha^2 = {alpha2}")]
    Truncation { dim: usize, alpha2: f64 },

    #[error("invalid two-photon ramp: {0}")]
    InvalidRamp(String),

    #[error("adiabatic eigenstate tracking lost at t = {t:.4} (overlap {overlap:.3})")]
    AdiabaticityLoss { t: f64, overlap: f64 },

    #[error("scheme infeasible: {0}")]
    Infeasible(String),

    #[error("propagation did not converge: {0}")]
    Stiffness(String),

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
