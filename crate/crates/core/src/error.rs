use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("spin-orbital index {index} is outside a basis of {size} orbitals")]
    BasisMismatch { index: usize, size: usize },
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("order {r} is outside 1..={n}")]
    OrderOutOfRange { r: usize, n: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("geometry relaxation did not converge after {iterations} iterations (gradient norm {gradient:.3e} eV/Å)")]
    NoConvergence { iterations: usize, gradient: f64 },
    #[error("Hessian has a negative eigenvalue {eigenvalue:.3e}; the geometry is not a minimum")]
    UnstableGeometry { eigenvalue: f64 },
    #[error("orbital orthonormality lost at step {step} (deviation {deviation:.3e})")]
    OrthonormalityLost { step: usize, deviation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
