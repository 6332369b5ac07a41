use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use super::laser::LaserPulse;
use super::ssh::{align_signs, sorted_eigen, SshChain, HBAR};
use super::wigner::NuclearSample;
use crate::densmat::{from_pure, PureState};
use crate::fock::{spin_sector_determinants, SlaterDeterminant, SpinOrbitalBasis};
use crate::linalg::CMatrix;
use crate::rdm::build_rdm;
use crate::{Error, Result};

/// Electronic initial condition for every trajectory, written in the
/// adiabatic orbitals of each trajectory's starting geometry.
///
/// Determinants live in the spin-blocked basis of `2L` spin orbitals:
/// orbitals `0..L` are the spin-up levels in ascending energy and `L..2L`
/// the spin-down ones.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    n_sites: usize,
    n_up: usize,
    n_down: usize,
    state: PureState,
    /// Up and down occupied level lists of each determinant in `state`.
    occupations: Vec<(Vec<usize>, Vec<usize>)>,
    /// Spin-summed one-body density in the orbital basis, `γ[p,q] = ⟨c†_q c_p⟩`.
    density: CMatrix,
}

fn split_spins(det: &SlaterDeterminant, n_sites: usize) -> (Vec<usize>, Vec<usize>) {
    let up = det.occupied().filter(|&i| i < n_sites).collect();
    let down = det
        .occupied()
        .filter(|&i| i >= n_sites)
        .map(|i| i - n_sites)
        .collect();
    (up, down)
}

impl InitialState {
    pub fn new(n_sites: usize, state: PureState) -> Result<Self> {
        let k = 2 * n_sites;
        if state.dets().iter().any(|d| d.n_orbitals() != k) {
            return Err(Error::Incompatible(format!(
                "initial determinants must span {k} spin orbitals for a {n_sites}-site chain"
            )));
        }
        let occupations: Vec<_> = state
            .dets()
            .iter()
            .map(|d| split_spins(d, n_sites))
            .collect();
        let (n_up, n_down) = (occupations[0].0.len(), occupations[0].1.len());
        if occupations
            .iter()
            .any(|(u, d)| u.len() != n_up || d.len() != n_down)
        {
            return Err(Error::InvalidState(
                "initial determinants must share the same spin-up and spin-down electron counts"
                    .into(),
            ));
        }
        let rho = from_pure(&state).with_basis(SpinOrbitalBasis::spin_blocked(n_sites))?;
        let d1 = build_rdm(&rho, 1)?;
        let m = d1.matrix();
        let density = CMatrix::from_fn(n_sites, n_sites, |p, q| {
            m[(q, p)] + m[(q + n_sites, p + n_sites)]
        });
        Ok(Self {
            n_sites,
            n_up,
            n_down,
            state,
            occupations,
            density,
        })
    }

    /// Closed-shell ground determinant of the neutral half-filled chain.
    pub fn ground(n_sites: usize) -> Result<Self> {
        Self::superposition(n_sites, &[(closed_shell(n_sites), 1.0)])
    }

    /// `√c₀² Φ₀ + √(1-c₀²) Φ₁` with `Φ₁` the spin-up HOMO→LUMO excitation.
    pub fn type_one(n_sites: usize, ground_weight: f64) -> Result<Self> {
        let phi1 = homo_lumo_excited(n_sites, true, false);
        Self::superposition(
            n_sites,
            &[
                (closed_shell(n_sites), ground_weight),
                (phi1, 1.0 - ground_weight),
            ],
        )
    }

    /// `√c₀² Φ₀ + √(1-c₀²) Φ₃` with `Φ₃` the doubly excited HOMO²→LUMO² determinant.
    pub fn type_two(n_sites: usize, ground_weight: f64) -> Result<Self> {
        let phi3 = homo_lumo_excited(n_sites, true, true);
        Self::superposition(
            n_sites,
            &[
                (closed_shell(n_sites), ground_weight),
                (phi3, 1.0 - ground_weight),
            ],
        )
    }

    fn superposition(n_sites: usize, terms: &[(SlaterDeterminant, f64)]) -> Result<Self> {
        if n_sites < 2 || n_sites % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "need an even number of sites, got {n_sites}"
            )));
        }
        if terms.iter().any(|(_, w)| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParameter(
                "determinant weights must lie in [0, 1]".into(),
            ));
        }
        let (dets, amps): (Vec<_>, Vec<_>) = terms
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(d, w)| (d.clone(), Complex64::new(w.sqrt(), 0.0)))
            .unzip();
        Self::new(n_sites, PureState::new(dets, amps)?)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_electrons(&self) -> usize {
        self.n_up + self.n_down
    }

    pub fn spin_counts(&self) -> (usize, usize) {
        (self.n_up, self.n_down)
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    /// Spin-summed orbital-basis one-body density.
    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    /// All determinants with the same spin counts, in the order used for
    /// trajectory amplitudes.
    pub fn label_space(&self) -> Vec<SlaterDeterminant> {
        spin_sector_determinants(self.n_sites, self.n_up, self.n_down)
    }
}

/// Closed-shell determinant filling the lowest `L/2` levels of each spin.
pub fn closed_shell(n_sites: usize) -> SlaterDeterminant {
    let h = n_sites / 2;
    let occ: Vec<usize> = (0..h).chain(n_sites..n_sites + h).collect();
    SlaterDeterminant::from_occupied(2 * n_sites, &occ).expect("indices lie inside the basis")
}

/// Closed shell with the HOMO electron of the selected spins promoted to the LUMO.
pub fn homo_lumo_excited(n_sites: usize, up: bool, down: bool) -> SlaterDeterminant {
    let h = n_sites / 2;
    let mut occ: Vec<usize> = Vec::new();
    occ.extend((0..h - 1).chain(core::iter::once(if up { h } else { h - 1 })));
    occ.extend(
        (n_sites..n_sites + h - 1).chain(core::iter::once(n_sites + if down { h } else { h - 1 })),
    );
    SlaterDeterminant::from_occupied(2 * n_sites, &occ).expect("indices lie inside the basis")
}

/// Determinant of a small complex matrix by Gaussian elimination with partial pivoting.
pub(crate) fn complex_det(mut a: CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&i, &j| a[(i, c)].norm_sqr().total_cmp(&a[(j, c)].norm_sqr()))
            .unwrap_or(c);
        if a[(pivot, c)].is_zero() {
            return Complex64::zero();
        }
        if pivot != c {
            a.swap_rows(pivot, c);
            det = -det;
        }
        let d = a[(c, c)];
        det *= d;
        for r in c + 1..n {
            let f = a[(r, c)] / d;
            if !f.is_zero() {
                for k in c + 1..n {
                    let v = a[(c, k)];
                    a[(r, k)] -= f * v;
                }
            }
        }
    }
    det
}

/// One Ehrenfest trajectory.
///
/// Every occupied orbital evolves under the same single-particle propagator
/// `U(t)`, so the many-electron state is `Û(t)|Ψ₀⟩`. The orbitals of the
/// starting geometry are `V₀`; amplitudes are reported against the
/// adiabatic orbitals `V(t)` of the current geometry, whose signs are kept
/// continuous in time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub time: f64,
    pub displacements: DVector<f64>,
    pub momenta: DVector<f64>,
    propagator: CMatrix,
    orbitals0: DMatrix<f64>,
    labels: DMatrix<f64>,
    density0: CMatrix,
    forces: DVector<f64>,
    conjugated: bool,
}

impl Trajectory {
    /// Starts a trajectory from a nuclear sample. `reference_orbitals` fixes
    /// the sign of each adiabatic orbital at the starting geometry.
    pub fn new(
        chain: &SshChain,
        sample: &NuclearSample,
        initial: &InitialState,
        reference_orbitals: &DMatrix<f64>,
    ) -> Result<Self> {
        let n = chain.n_sites();
        if initial.n_sites != n || sample.displacements.len() != n || sample.momenta.len() != n {
            return Err(Error::Incompatible(format!(
                "trajectory data does not match a {n}-site chain"
            )));
        }
        let (_, mut v0) = sorted_eigen(chain.hamiltonian_at(&sample.displacements, 0.0));
        align_signs(&mut v0, reference_orbitals);
        let v0c = v0.map(|x| Complex64::new(x, 0.0));
        let density0 = &v0c * &initial.density * v0c.transpose();
        let propagator = CMatrix::identity(n, n);
        let forces = chain.forces(&sample.displacements, &density0, 0.0);
        Ok(Self {
            time: 0.0,
            displacements: sample.displacements.clone(),
            momenta: sample.momenta.clone(),
            propagator,
            labels: v0.clone(),
            orbitals0: v0,
            density0,
            forces,
            conjugated: false,
        })
    }

    /// Recomputes forces for the current state, for example after the field changes.
    pub fn refresh_forces(&mut self, chain: &SshChain, laser: Option<&LaserPulse>) {
        let field = laser.map_or(0.0, |l| l.field(self.time));
        self.forces = chain.forces(&self.displacements, &self.density(), field);
    }

    /// Spin-summed one-body density in the site basis, `U Γ₀ U†`.
    pub fn density(&self) -> CMatrix {
        &self.propagator * &self.density0 * self.propagator.adjoint()
    }

    /// Time-evolved orbital coefficients in the site basis, one column per level.
    pub fn orbital_coefficients(&self) -> CMatrix {
        &self.propagator * self.orbitals0.map(|x| Complex64::new(x, 0.0))
    }

    /// Largest entry of `C†C - 1` for the orbital coefficient matrix `C`.
    pub fn orthonormality_error(&self) -> f64 {
        let c = self.orbital_coefficients();
        let n = c.ncols();
        let g = c.adjoint() * &c - CMatrix::identity(n, n);
        g.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Field-free total energy: electronic, elastic and kinetic.
    pub fn total_energy(&self, chain: &SshChain) -> f64 {
        chain.total_energy(&self.displacements, &self.momenta, &self.density())
    }

    /// Advances by `dt`: half kick, drift, exponential midpoint propagation of
    /// the orbitals, new forces, half kick.
    pub fn step(&mut self, chain: &SshChain, dt: f64, laser: Option<&LaserPulse>) {
        let n = chain.n_sites();
        let mass = chain.params.mass;
        self.momenta.axpy(0.5 * dt, &self.forces, 1.0);
        let old = self.displacements.clone();
        self.displacements.axpy(dt / mass, &self.momenta, 1.0);
        let mid = (&old + &self.displacements) * 0.5;
        let field_mid = laser.map_or(0.0, |l| l.field(self.time + 0.5 * dt));
        let (eps, v) = sorted_eigen(chain.hamiltonian_at(&mid, field_mid));
        let mut prop = CMatrix::zeros(n, n);
        for k in 0..n {
            let phase = Complex64::from_polar(1.0, -eps[k] * dt / HBAR);
            for i in 0..n {
                let vik = v[(i, k)] * phase;
                for j in 0..n {
                    prop[(i, j)] += vik * v[(j, k)];
                }
            }
        }
        self.propagator = prop * &self.propagator;
        self.time += dt;
        self.refresh_forces(chain, laser);
        self.momenta.axpy(0.5 * dt, &self.forces, 1.0);
    }

    /// Re-diagonalizes the field-free Hamiltonian at the current geometry and
    /// keeps eigenvector signs continuous with the previous labels.
    pub fn update_labels(&mut self, chain: &SshChain) {
        let (_, mut v) = sorted_eigen(chain.hamiltonian_at(&self.displacements, 0.0));
        align_signs(&mut v, &self.labels);
        self.labels = v;
    }

    /// Time reversal: negates momenta and complex-conjugates the electronic state.
    pub fn reverse(&mut self, chain: &SshChain, laser: Option<&LaserPulse>) {
        self.momenta.neg_mut();
        self.propagator = self.propagator.conjugate();
        self.density0 = self.density0.conjugate();
        self.conjugated = !self.conjugated;
        self.refresh_forces(chain, laser);
    }

    /// Amplitudes of the many-electron state on `label_space`, expressed in
    /// the current adiabatic orbitals.
    pub fn label_amplitudes(
        &self,
        initial: &InitialState,
        label_space: &[SlaterDeterminant],
    ) -> Vec<Complex64> {
        let n = initial.n_sites;
        let w =
            self.labels.map(|x| Complex64::new(x, 0.0)).transpose() * self.orbital_coefficients();
        let minor = |rows: &[usize], cols: &[usize]| {
            complex_det(CMatrix::from_fn(rows.len(), cols.len(), |r, c| {
                w[(rows[r], cols[c])]
            }))
        };
        let amps: Vec<Complex64> = initial
            .state
            .amplitudes()
            .iter()
            .map(|&c| if self.conjugated { c.conj() } else { c })
            .collect();
        label_space
            .iter()
            .map(|det| {
                let (bu, bd) = split_spins(det, n);
                initial
                    .occupations
                    .iter()
                    .zip(&amps)
                    .map(|((au, ad), c)| c * minor(&bu, au) * minor(&bd, ad))
                    .sum()
            })
            .collect()
    }
}
