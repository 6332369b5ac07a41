//! N-electron density matrices expanded over Slater determinants,
//! `ρ = Σ_nm a_nm |Φ_n⟩⟨Φ_m|`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{all_determinants, coherence_order, SlaterDeterminant, SpinOrbitalBasis};
use crate::linalg::{frobenius_sq, hermitian_deviation, hermitian_eigenvalues, CMatrix};
use crate::{Error, Result};

/// Tolerance on Hermiticity, trace and normalization checks.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Most negative eigenvalue a coefficient matrix may have.
pub const PSD_TOL: f64 = -1e-10;

fn check_uniform(dets: &[SlaterDeterminant]) -> Result<()> {
    let Some(first) = dets.first() else {
        return Err(Error::InvalidState("no determinants".into()));
    };
    let (k, n) = (first.n_orbitals(), first.n_electrons());
    for d in dets {
        if d.n_orbitals() != k || d.n_electrons() != n {
            return Err(Error::Incompatible(format!(
                "determinant {d} does not match {first} in orbital or electron count"
            )));
        }
    }
    Ok(())
}

/// Maps each determinant to the index of its first occurrence.
fn dedup(dets: Vec<SlaterDeterminant>) -> (Vec<SlaterDeterminant>, Vec<usize>) {
    let mut seen: BTreeMap<SlaterDeterminant, usize> = BTreeMap::new();
    let mut unique = Vec::new();
    let map = dets
        .into_iter()
        .map(|d| {
            *seen.entry(d.clone()).or_insert_with(|| {
                unique.push(d);
                unique.len() - 1
            })
        })
        .collect();
    (unique, map)
}

/// Normalized superposition `Σ_n c_n |Φ_n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dets: Vec<SlaterDeterminant>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state, merging amplitudes of repeated determinants.
    pub fn new(dets: Vec<SlaterDeterminant>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dets.len() != amplitudes.len() {
            return Err(Error::InvalidState(format!(
                "{} determinants but {} amplitudes",
                dets.len(),
                amplitudes.len()
            )));
        }
        check_uniform(&dets)?;
        let (dets, map) = dedup(dets);
        let mut merged = alloc::vec![Complex64::new(0.0, 0.0); dets.len()];
        for (c, &g) in amplitudes.iter().zip(&map) {
            merged[g] += c;
        }
        let norm: f64 = merged.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm is {norm}, expected 1"
            )));
        }
        Ok(Self {
            dets,
            amplitudes: merged,
        })
    }

    pub fn dets(&self) -> &[SlaterDeterminant] {
        &self.dets
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Hermitian, unit-trace, positive semidefinite coefficient matrix over a
/// list of distinct determinants with a common orbital and electron count.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrixExpansion {
    basis: SpinOrbitalBasis,
    dets: Vec<SlaterDeterminant>,
    coeffs: CMatrix,
}

impl DensityMatrixExpansion {
    /// Validates and builds an expansion. Repeated determinants are merged by
    /// summing their rows and columns. The basis defaults to
    /// [`SpinOrbitalBasis::default_for`]; see [`Self::with_basis`].
    pub fn new(dets: Vec<SlaterDeterminant>, coeffs: CMatrix) -> Result<Self> {
        let m = dets.len();
        if coeffs.nrows() != m || coeffs.ncols() != m {
            return Err(Error::InvalidState(format!(
                "coefficient matrix is {}x{} for {} determinants",
                coeffs.nrows(),
                coeffs.ncols(),
                m
            )));
        }
        check_uniform(&dets)?;
        let (dets, map) = dedup(dets);
        let coeffs = if dets.len() == m {
            coeffs
        } else {
            let mut merged = CMatrix::zeros(dets.len(), dets.len());
            for i in 0..m {
                for j in 0..m {
                    merged[(map[i], map[j])] += coeffs[(i, j)];
                }
            }
            merged
        };
        let state = Self::new_unchecked(dets, coeffs);
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn new_unchecked(dets: Vec<SlaterDeterminant>, coeffs: CMatrix) -> Self {
        let basis = SpinOrbitalBasis::default_for(dets[0].n_orbitals());
        Self {
            basis,
            dets,
            coeffs,
        }
    }

    /// Replaces the orbital labels; the basis size must match the determinants.
    pub fn with_basis(mut self, basis: SpinOrbitalBasis) -> Result<Self> {
        if basis.len() != self.n_orbitals() {
            return Err(Error::Incompatible(format!(
                "basis has {} orbitals but determinants have {}",
                basis.len(),
                self.n_orbitals()
            )));
        }
        self.basis = basis;
        Ok(self)
    }

    pub fn basis(&self) -> &SpinOrbitalBasis {
        &self.basis
    }

    fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.coeffs);
        if dev > ALGEBRAIC_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let trace = self.coeffs.trace();
        if (trace.re - 1.0).abs() > ALGEBRAIC_TOL || trace.im.abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        if let Some(&min) = hermitian_eigenvalues(&self.coeffs).last() {
            if min < PSD_TOL {
                return Err(Error::InvalidState(format!(
                    "coefficient matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn dets(&self) -> &[SlaterDeterminant] {
        &self.dets
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    /// Number of determinants `M`.
    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn n_electrons(&self) -> usize {
        self.dets[0].n_electrons()
    }

    pub fn n_orbitals(&self) -> usize {
        self.dets[0].n_orbitals()
    }

    pub fn index_of(&self, det: &SlaterDeterminant) -> Option<usize> {
        self.dets.iter().position(|d| d == det)
    }

    /// Determinant populations `a_nn`.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.coeffs[(n, n)].re).collect()
    }

    /// Matrix of coherence orders `s_nm`.
    pub fn orders(&self) -> DMatrix<usize> {
        let m = self.len();
        DMatrix::from_fn(m, m, |i, j| {
            coherence_order(&self.dets[i], &self.dets[j])
                .expect("determinants validated at construction")
        })
    }

    /// Re-expands the state after a unitary change of single-particle basis.
    ///
    /// Old creators are written as `c†_q = Σ_p u[(p, q)] c'†_p`, so each
    /// determinant becomes `Σ_B det(u[B, A]) |Φ'_B⟩` over every determinant of
    /// the same electron count. No entries are dropped, so the output spans
    /// the full determinant space.
    pub fn rotate_orbitals(&self, u: &CMatrix) -> Result<Self> {
        let k = self.n_orbitals();
        if u.nrows() != k || u.ncols() != k {
            return Err(Error::Incompatible(format!(
                "rotation is {}x{} for {} orbitals",
                u.nrows(),
                u.ncols(),
                k
            )));
        }
        let target = all_determinants(k, self.n_electrons());
        let cols: Vec<Vec<usize>> = self.dets.iter().map(|d| d.occupied().collect()).collect();
        let t = CMatrix::from_fn(target.len(), self.len(), |b, a| {
            let rows: Vec<usize> = target[b].occupied().collect();
            let n = rows.len();
            CMatrix::from_fn(n, n, |i, j| u[(rows[i], cols[a][j])]).determinant()
        });
        let coeffs = &t * &self.coeffs * t.adjoint();
        Ok(Self {
            basis: self.basis.clone(),
            dets: target,
            coeffs,
        })
    }
}

/// `a_nm = c_n conj(c_m)`.
pub fn from_pure(state: &PureState) -> DensityMatrixExpansion {
    let c = CMatrix::from_column_slice(state.amplitudes.len(), 1, &state.amplitudes);
    DensityMatrixExpansion::new_unchecked(state.dets.clone(), &c * c.adjoint())
}

/// N-body purity `Tr ρ² = Σ_nm |a_nm|²`.
pub fn nbody_purity(rho: &DensityMatrixExpansion) -> f64 {
    frobenius_sq(&rho.coeffs)
}

/// Zeroes every coherence `a_nm` (with `n != m`) for which `select(n, m)` holds.
///
/// The predicate is consulted for both orderings of each pair and the pair is
/// dephased if either returns `true`, which keeps the result Hermitian.
pub fn dephase(
    rho: &DensityMatrixExpansion,
    select: impl Fn(usize, usize) -> bool,
) -> Result<DensityMatrixExpansion> {
    let mut coeffs = rho.coeffs.clone();
    let m = rho.len();
    for n in 0..m {
        for k in n + 1..m {
            if select(n, k) || select(k, n) {
                coeffs[(n, k)] = Complex64::new(0.0, 0.0);
                coeffs[(k, n)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let out = DensityMatrixExpansion {
        basis: rho.basis.clone(),
        dets: rho.dets.clone(),
        coeffs,
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn det(s: &str) -> SlaterDeterminant {
        SlaterDeterminant::parse(s).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn type_one() -> PureState {
        PureState::new(
            vec![det("11001100"), det("10101100")],
            vec![c(0.75f64.sqrt()), c(0.25f64.sqrt())],
        )
        .unwrap()
    }

    #[test]
    fn basis_state_projector() {
        let s = PureState::new(vec![det("1100"), det("1010")], vec![c(1.0), c(0.0)]).unwrap();
        let rho = from_pure(&s);
        assert_eq!(rho.coeffs()[(0, 0)], c(1.0));
        assert_eq!(rho.coeffs()[(0, 1)], c(0.0));
        assert_eq!(rho.coeffs()[(1, 1)], c(0.0));
    }

    #[test]
    fn type_one_superposition_entries() {
        let rho = from_pure(&type_one());
        assert!((rho.coeffs()[(0, 0)].re - 0.75).abs() < 1e-15);
        assert!((rho.coeffs()[(1, 1)].re - 0.25).abs() < 1e-15);
        assert!((rho.coeffs()[(0, 1)].norm_sqr() - 3.0 / 16.0).abs() < 1e-15);
        assert!((nbody_purity(&rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_purities() {
        let dets = vec![det("1100"), det("0011")];
        let equal =
            DensityMatrixExpansion::new(dets.clone(), CMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert!((nbody_purity(&equal) - 0.5).abs() < 1e-15);
        let unequal = DensityMatrixExpansion::new(
            dets,
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.75), c(0.25)])),
        )
        .unwrap();
        assert!((nbody_purity(&unequal) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn dephasing_keeps_populations() {
        let rho = from_pure(&type_one());
        let d = dephase(&rho, |_, _| true).unwrap();
        assert_eq!(d.populations(), rho.populations());
        assert_eq!(d.coeffs()[(0, 1)], c(0.0));
        assert_eq!(dephase(&rho, |_, _| false).unwrap(), rho);
    }

    #[test]
    fn selective_dephasing_keeps_one_coherence() {
        let amps = vec![c(0.6), c(0.8 / 2f64.sqrt()), c(0.8 / 2f64.sqrt())];
        let s = PureState::new(
            vec![det("11001100"), det("10101100"), det("11001010")],
            amps,
        )
        .unwrap();
        let rho = from_pure(&s);
        let m4 = dephase(&rho, |n, m| n == 0 || m == 0).unwrap();
        assert_eq!(m4.coeffs()[(0, 1)], c(0.0));
        assert_eq!(m4.coeffs()[(0, 2)], c(0.0));
        assert!((m4.coeffs()[(1, 2)].re - 0.32).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_invalid_matrices() {
        let dets = vec![det("1100"), det("0011")];
        let mut m = CMatrix::identity(2, 2).scale(0.5);
        m[(0, 1)] = Complex64::new(0.1, 0.1);
        assert!(matches!(
            DensityMatrixExpansion::new(dets.clone(), m),
            Err(Error::NotHermitian { .. })
        ));
        assert!(DensityMatrixExpansion::new(dets.clone(), CMatrix::identity(2, 2)).is_err());
        let mut neg = CMatrix::identity(2, 2).scale(0.5);
        neg[(0, 1)] = c(0.9);
        neg[(1, 0)] = c(0.9);
        assert!(DensityMatrixExpansion::new(dets, neg).is_err());
        assert!(PureState::new(vec![det("1100")], vec![c(0.9)]).is_err());
        assert!(PureState::new(vec![det("1100"), det("1110")], vec![c(1.0), c(0.0)]).is_err());
    }

    #[test]
    fn repeated_determinants_merge() {
        let s = PureState::new(vec![det("1100"), det("1100")], vec![c(0.5), c(0.5)]).unwrap();
        assert_eq!(s.dets().len(), 1);
        assert_eq!(s.amplitudes()[0], c(1.0));
    }

    #[test]
    fn identity_rotation_keeps_purity() {
        let rho = from_pure(&type_one());
        let rot = rho.rotate_orbitals(&CMatrix::identity(8, 8)).unwrap();
        assert_eq!(rot.len(), 70);
        assert!((nbody_purity(&rot) - 1.0).abs() < 1e-12);
        let g = rot.index_of(&det("11001100")).unwrap();
        assert!((rot.coeffs()[(g, g)].re - 0.75).abs() < 1e-14);
    }
}
