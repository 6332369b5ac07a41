use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ssh::{normal_modes, NormalModes, SshChain, HBAR};
use crate::Result;

/// How the nuclear initial conditions were drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Harmonic ground-state Wigner distribution of every normal mode.
    Wigner { seed: u64 },
    /// Every trajectory starts at rest at the relaxed geometry.
    ZeroWidth,
}

/// Initial nuclear phase-space point of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct NuclearSample {
    pub displacements: DVector<f64>,
    pub momenta: DVector<f64>,
}

/// Nuclear initial conditions for an ensemble of Ehrenfest trajectories
/// around a relaxed reference chain.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub reference: SshChain,
    pub modes: NormalModes,
    pub sampling: Sampling,
    pub samples: Vec<NuclearSample>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Analytic variances `(σ_u², σ_p²)` of each mode's displacement and
    /// momentum amplitude: `ħ/(2Mω)` and `ħMω/2`.
    pub fn mode_variances(&self) -> Vec<(f64, f64)> {
        let m = self.reference.params.mass;
        self.modes
            .frequencies
            .iter()
            .map(|&w| (HBAR / (2.0 * m * w), HBAR * m * w / 2.0))
            .collect()
    }
}

/// Draws `n_traj` nuclear initial conditions from the harmonic Wigner
/// distribution of the ground vibrational state. The chain must be relaxed.
pub fn sample_wigner(chain: &SshChain, n_traj: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    sample(chain, n_traj, Sampling::Wigner { seed })
}

/// Like [`sample_wigner`], with the option of zero-width sampling.
pub fn sample(chain: &SshChain, n_traj: usize, sampling: Sampling) -> Result<TrajectoryEnsemble> {
    let modes = normal_modes(chain)?;
    let n = chain.n_sites();
    let m = chain.params.mass;
    let u0 = &chain.displacements;
    let samples = match sampling {
        Sampling::ZeroWidth => (0..n_traj)
            .map(|_| NuclearSample {
                displacements: u0.clone(),
                momenta: DVector::zeros(n),
            })
            .collect(),
        Sampling::Wigner { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_traj)
                .map(|_| {
                    let mut u = u0.clone();
                    let mut p = DVector::zeros(n);
                    for (k, &w) in modes.frequencies.iter().enumerate() {
                        let zq: f64 = StandardNormal.sample(&mut rng);
                        let zp: f64 = StandardNormal.sample(&mut rng);
                        let q = zq * (HBAR / (2.0 * m * w)).sqrt();
                        let pk = zp * (HBAR * m * w / 2.0).sqrt();
                        u.axpy(q, &modes.vectors.column(k), 1.0);
                        p.axpy(pk, &modes.vectors.column(k), 1.0);
                    }
                    NuclearSample {
                        displacements: u,
                        momenta: p,
                    }
                })
                .collect()
        }
    };
    Ok(TrajectoryEnsemble {
        reference: chain.clone(),
        modes,
        sampling,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::ssh::{relax_geometry, SshParams};
    use super::*;

    fn relaxed() -> SshChain {
        relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let chain = relaxed();
        let a = sample_wigner(&chain, 5, 7).unwrap();
        let b = sample_wigner(&chain, 5, 7).unwrap();
        let c = sample_wigner(&chain, 5, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn zero_width_sits_at_minimum() {
        let chain = relaxed();
        let e = sample(&chain, 1, Sampling::ZeroWidth).unwrap();
        assert_eq!(e.samples[0].displacements, chain.displacements);
        assert_eq!(e.samples[0].momenta.amax(), 0.0);
    }
}
