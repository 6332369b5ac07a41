//! Reduced purities of many-electron density matrices.
//!
//! States are expanded in Slater determinants over a spin-orbital basis.
//! From such an expansion the crate builds r-body reduced density matrices by
//! direct operator-string evaluation, evaluates the r-body purities
//! `P_r = Tr[Γ_r²]` and their closed forms for one and two bodies, tabulates
//! the limiting values those purities can reach, and runs the model
//! elimination procedure that infers which coherences a state carries from
//! its reduced purities alone.
//!
//! The [`vibronic`] module supplies data to analyse: a Su-Schrieffer-Heeger
//! chain propagated with Ehrenfest dynamics over a Wigner-sampled ensemble.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;

pub mod densmat;
pub mod fock;
pub mod purity;
pub mod rdm;
pub mod reconstruct;
pub mod vibronic;

pub use error::{Error, Result};
pub use linalg::{binomial, factorial, CMatrix};

pub use num_complex::Complex64;
