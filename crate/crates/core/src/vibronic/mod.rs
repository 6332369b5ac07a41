//! SSH chain with electron-vibration coupling, propagated by Ehrenfest
//! dynamics over Wigner-sampled trajectory ensembles.
//!
//! Units are eV, Å and fs throughout.

mod ehrenfest;
mod ensemble;
mod laser;
mod ssh;
mod wigner;

pub use ehrenfest::{closed_shell, homo_lumo_excited, InitialState, Trajectory};
pub use ensemble::{
    accumulate, photoexcitation_experiment, propagate, run_trajectory, Bootstrap, EnergyWarning,
    EnsembleSeries, PropagationSettings, TrajectoryRecord, ENERGY_TOL, ORTHONORMALITY_TOL,
};
pub use laser::LaserPulse;
pub use ssh::{normal_modes, relax_geometry, NormalModes, SshChain, SshParams, HBAR};
pub use wigner::{sample, sample_wigner, NuclearSample, Sampling, TrajectoryEnsemble};
