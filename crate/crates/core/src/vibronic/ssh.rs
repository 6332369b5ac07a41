use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Reduced Planck constant in eV·fs.
pub const HBAR: f64 = 0.658_211_956_9;

/// Parameters of an open Su-Schrieffer-Heeger chain.
///
/// Units are eV, Å and fs; the mass is in eV·fs²/Å² so that momenta come out
/// in eV·fs/Å.
#[derive(Clone, Debug, PartialEq)]
pub struct SshParams {
    pub n_sites: usize,
    /// Hopping `t0` of the undistorted chain (eV).
    pub hopping: f64,
    /// Electron-phonon coupling `α` (eV/Å).
    pub coupling: f64,
    /// Bond spring constant (eV/Å²).
    pub spring: f64,
    /// Mass of one CH unit (eV·fs²/Å²).
    pub mass: f64,
    /// Equilibrium site spacing along the chain axis (Å), used for dipole positions.
    pub lattice_spacing: f64,
}

impl Default for SshParams {
    fn default() -> Self {
        Self {
            n_sites: 4,
            hopping: 2.5,
            coupling: 4.1,
            spring: 21.0,
            mass: 1349.14,
            lattice_spacing: 1.22,
        }
    }
}

impl SshParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hopping", self.hopping),
            ("spring", self.spring),
            ("mass", self.mass),
            ("lattice_spacing", self.lattice_spacing),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling must be nonnegative, got {}",
                self.coupling
            )));
        }
        if self.n_sites < 2 || self.n_sites % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "the neutral half-filled chain needs an even number of sites, got {}",
                self.n_sites
            )));
        }
        Ok(())
    }
}

/// Chain geometry: site displacements `u_j` and momenta `p_j`.
///
/// The energy is
/// `E = Σ_σ Tr[h γ_σ] + Σ_n (K/2 y_n² + τ y_n) + Σ_j p_j²/2M`
/// with bond changes `y_n = u_{n+1} - u_n` and hoppings `-(t0 - α y_n)`.
/// The tension `τ` stands in for the σ framework: it is fixed when the
/// geometry is relaxed so the neutral ground state keeps its total length.
#[derive(Clone, Debug, PartialEq)]
pub struct SshChain {
    pub params: SshParams,
    pub displacements: DVector<f64>,
    pub momenta: DVector<f64>,
    pub tension: f64,
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub(crate) fn sorted_eigen(h: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Flips eigenvector signs so each column overlaps positively with the
/// matching column of `reference`.
pub(crate) fn align_signs(vectors: &mut DMatrix<f64>, reference: &DMatrix<f64>) {
    for c in 0..vectors.ncols() {
        if vectors.column(c).dot(&reference.column(c)) < 0.0 {
            vectors.column_mut(c).neg_mut();
        }
    }
}

impl SshChain {
    /// Undistorted chain at rest with zero tension.
    pub fn new(params: SshParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_sites;
        Ok(Self {
            params,
            displacements: DVector::zeros(n),
            momenta: DVector::zeros(n),
            tension: 0.0,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    /// Number of electrons of the neutral chain, one per site.
    pub fn n_electrons(&self) -> usize {
        self.params.n_sites
    }

    /// Position of site `j` along the chain axis, centred on the chain midpoint.
    pub fn position(&self, u: &DVector<f64>, j: usize) -> f64 {
        (j as f64 - (self.n_sites() as f64 - 1.0) / 2.0) * self.params.lattice_spacing + u[j]
    }

    /// Single-particle Hamiltonian at displacements `u` in a uniform field
    /// `field` (V/Å). The dipole term adds `field · x_j` on site `j`.
    pub fn hamiltonian_at(&self, u: &DVector<f64>, field: f64) -> DMatrix<f64> {
        let n = self.n_sites();
        let p = &self.params;
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n - 1 {
            let t = -(p.hopping - p.coupling * (u[j + 1] - u[j]));
            h[(j, j + 1)] = t;
            h[(j + 1, j)] = t;
        }
        if field != 0.0 {
            for j in 0..n {
                h[(j, j)] = field * self.position(u, j);
            }
        }
        h
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        self.hamiltonian_at(&self.displacements, 0.0)
    }

    /// Orbital energies and real orbitals of the field-free Hamiltonian.
    pub fn orbitals(&self) -> (DVector<f64>, DMatrix<f64>) {
        sorted_eigen(self.hamiltonian())
    }

    /// Gap between the lowest unoccupied and highest occupied orbital of the
    /// neutral closed-shell chain.
    pub fn homo_lumo_gap(&self) -> f64 {
        let (e, _) = self.orbitals();
        let h = self.n_sites() / 2;
        e[h] - e[h - 1]
    }

    /// Spin-summed one-body density of the closed-shell ground state, in the site basis.
    pub fn ground_density(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (_, v) = sorted_eigen(self.hamiltonian_at(u, 0.0));
        let occ = v.columns(0, self.n_sites() / 2);
        (occ * occ.transpose()) * 2.0
    }

    /// `∂E/∂y_n` given the spin-summed bond orders `B_n = 2 Re γ_{n,n+1}`.
    fn bond_gradient(&self, u: &DVector<f64>, bond_orders: &[f64]) -> Vec<f64> {
        let p = &self.params;
        (0..self.n_sites() - 1)
            .map(|n| p.coupling * bond_orders[n] + p.spring * (u[n + 1] - u[n]) + self.tension)
            .collect()
    }

    /// Ehrenfest forces for a spin-summed density `gamma` (site basis) in a
    /// uniform field. Each site carries an ion of charge `+1`.
    pub fn forces(&self, u: &DVector<f64>, gamma: &CMatrix, field: f64) -> DVector<f64> {
        let n = self.n_sites();
        let b: Vec<f64> = (0..n - 1).map(|j| 2.0 * gamma[(j, j + 1)].re).collect();
        let g = self.bond_gradient(u, &b);
        let mut f = DVector::zeros(n);
        for (j, gj) in g.iter().enumerate() {
            f[j + 1] -= gj;
            f[j] += gj;
        }
        if field != 0.0 {
            for j in 0..n {
                f[j] -= field * (gamma[(j, j)].re - 1.0);
            }
        }
        f
    }

    /// Born-Oppenheimer forces of the closed-shell ground state.
    pub fn ground_forces(&self, u: &DVector<f64>) -> DVector<f64> {
        let gamma = self
            .ground_density(u)
            .map(|x| num_complex::Complex64::new(x, 0.0));
        self.forces(u, &gamma, 0.0)
    }

    /// Elastic energy including the tension term.
    pub fn elastic_energy(&self, u: &DVector<f64>) -> f64 {
        (0..self.n_sites() - 1)
            .map(|n| {
                let y = u[n + 1] - u[n];
                0.5 * self.params.spring * y * y + self.tension * y
            })
            .sum()
    }

    pub fn kinetic_energy(&self, p: &DVector<f64>) -> f64 {
        p.norm_squared() / (2.0 * self.params.mass)
    }

    /// Total energy for a spin-summed density, field-free.
    pub fn total_energy(&self, u: &DVector<f64>, p: &DVector<f64>, gamma: &CMatrix) -> f64 {
        let h = self.hamiltonian_at(u, 0.0);
        let mut el = 0.0;
        for i in 0..self.n_sites() {
            for j in 0..self.n_sites() {
                el += h[(i, j)] * gamma[(j, i)].re;
            }
        }
        el + self.elastic_energy(u) + self.kinetic_energy(p)
    }

    /// Closed-shell ground-state energy at displacements `u`.
    pub fn ground_energy(&self, u: &DVector<f64>) -> f64 {
        let (e, _) = sorted_eigen(self.hamiltonian_at(u, 0.0));
        2.0 * e.rows(0, self.n_sites() / 2).sum() + self.elastic_energy(u)
    }
}

/// Relaxes the neutral closed-shell chain.
///
/// Bond lengths are updated self-consistently from `K y_n = -(α B_n + τ)`
/// with damping, and the tension is reset each iteration to `τ = -α ⟨B⟩` so
/// that the bond changes sum to zero. The centre of mass stays fixed. Stops
/// once the force norm is below `1e-8` eV/Å.
pub fn relax_geometry(chain: &SshChain) -> Result<SshChain> {
    const MAX_ITER: usize = 10_000;
    const GRADIENT_TOL: f64 = 1e-8;
    let mut out = chain.clone();
    out.params.validate()?;
    let n = out.n_sites();
    let alpha = out.params.coupling;
    let spring = out.params.spring;
    let mut u = out.displacements.clone();
    u.add_scalar_mut(-u.mean());
    let mut gradient = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let gamma = out.ground_density(&u);
        let b: Vec<f64> = (0..n - 1).map(|j| 2.0 * gamma[(j, j + 1)]).collect();
        out.tension = -alpha * b.iter().sum::<f64>() / (n - 1) as f64;
        out.displacements = u.clone();
        gradient = out.ground_forces(&u).norm();
        if gradient < GRADIENT_TOL {
            out.momenta = DVector::zeros(n);
            return Ok(out);
        }
        let mut target = DVector::<f64>::zeros(n);
        for j in 0..n - 1 {
            target[j + 1] = target[j] - (alpha * b[j] + out.tension) / spring;
        }
        target.add_scalar_mut(-target.mean());
        u = (&u + &target) * 0.5;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        gradient,
    })
}

/// Harmonic modes of the relaxed ground state.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalModes {
    /// Angular frequencies `ω_k` (rad/fs) of the vibrational modes, ascending.
    pub frequencies: Vec<f64>,
    /// Orthonormal displacement patterns, one column per vibrational mode.
    pub vectors: DMatrix<f64>,
    /// Number of zero-frequency modes removed (rigid translation).
    pub zero_modes: usize,
}

/// Normal modes from a central-difference Hessian of the ground-state
/// energy, built from analytic forces. Rigid translation is projected out.
pub fn normal_modes(chain: &SshChain) -> Result<NormalModes> {
    const STEP: f64 = 1e-4;
    const ZERO_TOL: f64 = 1e-6;
    const NEGATIVE_TOL: f64 = -1e-8;
    let n = chain.n_sites();
    let u0 = &chain.displacements;
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = u0.clone();
        let mut minus = u0.clone();
        plus[j] += STEP;
        minus[j] -= STEP;
        let col = (chain.ground_forces(&minus) - chain.ground_forces(&plus)) / (2.0 * STEP);
        hess.set_column(j, &col);
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let proj = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let hess = &proj * hess * &proj;
    let (values, vectors) = sorted_eigen(hess);
    if values[0] < NEGATIVE_TOL {
        return Err(Error::UnstableGeometry {
            eigenvalue: values[0],
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&k| values[k] > ZERO_TOL).collect();
    let frequencies = keep
        .iter()
        .map(|&k| (values[k] / chain.params.mass).sqrt())
        .collect();
    let vectors = DMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])]);
    Ok(NormalModes {
        frequencies,
        vectors,
        zero_modes: n - keep.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relaxed_chain_is_dimerized() {
        let chain = relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap();
        let u = &chain.displacements;
        let y: Vec<f64> = (0..3).map(|n| u[n + 1] - u[n]).collect();
        assert!(y[0] < 0.0 && y[1] > 0.0 && y[2] < 0.0);
        assert!((y[0] - y[2]).abs() < 1e-10);
        assert!(y.iter().sum::<f64>().abs() < 1e-10);
        assert!(chain.ground_forces(u).norm() < 1e-8);
        let (e, _) = chain.orbitals();
        for k in 1..4 {
            assert!(e[k] - e[k - 1] > 0.5);
        }
        let gap = chain.homo_lumo_gap();
        assert!((gap - 4.08).abs() < 0.2, "gap {gap}");
    }

    #[test]
    fn no_coupling_leaves_chain_uniform() {
        let params = SshParams {
            coupling: 0.0,
            ..SshParams::default()
        };
        let chain = relax_geometry(&SshChain::new(params).unwrap()).unwrap();
        assert!(chain.displacements.amax() < 1e-14);
        assert_eq!(chain.tension, 0.0);
    }

    #[test]
    fn forces_match_energy_gradient() {
        let chain = relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap();
        let u = DVector::from_vec(alloc::vec![0.03, -0.05, 0.02, 0.01]);
        let f = chain.ground_forces(&u);
        for j in 0..4 {
            let h = 1e-6;
            let mut a = u.clone();
            let mut b = u.clone();
            a[j] += h;
            b[j] -= h;
            let fd = -(chain.ground_energy(&a) - chain.ground_energy(&b)) / (2.0 * h);
            assert!((fd - f[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn modes_exclude_translation() {
        let chain = relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap();
        let modes = normal_modes(&chain).unwrap();
        assert_eq!(modes.zero_modes, 1);
        assert_eq!(modes.frequencies.len(), 3);
        for k in 0..3 {
            assert!(modes.vectors.column(k).sum().abs() < 1e-8);
            let quantum = HBAR * modes.frequencies[k];
            assert!(quantum > 0.03 && quantum < 0.3, "mode energy {quantum}");
        }
    }

    #[test]
    fn unrelaxed_saddle_is_rejected() {
        let chain = SshChain::new(SshParams {
            spring: 2.0,
            ..SshParams::default()
        })
        .unwrap();
        assert!(matches!(
            normal_modes(&chain),
            Err(Error::UnstableGeometry { .. })
        ));
    }
}
