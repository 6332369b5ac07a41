//! r-body reduced density matrices
//! `Γ^{j1…jr}_{i1…ir} = (1/r!) Σ_nm a_nm ⟨Φ_m| c†_{i1}…c†_{ir} c_{jr}…c_{j1} |Φ_n⟩`.
//!
//! Only ascending index tuples are stored. Row `I` and column `J` of
//! [`ReducedDensityMatrix::matrix`] hold `Γ^J_I` for ascending `I` and `J`,
//! with tuples ranked lexicographically. Other orderings follow from
//! antisymmetry.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use itertools::Itertools;
use num_complex::Complex64;

use crate::densmat::DensityMatrixExpansion;
use crate::fock::{apply_operator_string, OperatorString, SlaterDeterminant, SpinOrbitalBasis};
use crate::linalg::{
    binomial, factorial, frobenius_sq, hermitian_deviation, hermitian_eigenvalues, CMatrix,
};
use crate::{Error, Result};

/// Hermiticity tolerance for reduced density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Lexicographic rank of an ascending `r`-tuple drawn from `0..k`.
pub fn tuple_rank(k: usize, tuple: &[usize]) -> usize {
    let r = tuple.len();
    let tail: usize = tuple
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(k - 1 - c, r - i))
        .sum();
    binomial(k, r) - 1 - tail
}

/// All ascending `r`-tuples from `0..k` in lexicographic order.
pub fn ascending_tuples(k: usize, r: usize) -> Vec<Vec<usize>> {
    (0..k).combinations(r).collect()
}

/// Sorts `t` in place and returns the permutation parity, or `None` when an
/// index repeats.
fn sort_with_sign(t: &mut [usize]) -> Option<i8> {
    let mut sign = 1i8;
    for i in 1..t.len() {
        let mut j = i;
        while j > 0 && t[j - 1] > t[j] {
            t.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if t.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    r: usize,
    n_electrons: usize,
    basis: SpinOrbitalBasis,
    matrix: CMatrix,
}

impl ReducedDensityMatrix {
    /// Wraps an ascending-tuple matrix, checking its shape and Hermiticity.
    pub fn from_matrix(
        r: usize,
        n_electrons: usize,
        basis: SpinOrbitalBasis,
        matrix: CMatrix,
    ) -> Result<Self> {
        if r == 0 || r > n_electrons || n_electrons > basis.len() {
            return Err(Error::OrderOutOfRange { r, n: n_electrons });
        }
        let dim = binomial(basis.len(), r);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Incompatible(format!(
                "order {r} over {} orbitals needs a {dim}x{dim} matrix, got {}x{}",
                basis.len(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            r,
            n_electrons,
            basis,
            matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn basis(&self) -> &SpinOrbitalBasis {
        &self.basis
    }

    /// Stored matrix over ascending tuples, including the `1/r!` prefactor.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The ascending tuples labelling rows and columns of [`Self::matrix`].
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        ascending_tuples(self.basis.len(), self.r)
    }

    /// `Γ^{annihilators}_{creators}` for arbitrary index orderings.
    pub fn element(&self, creators: &[usize], annihilators: &[usize]) -> Result<Complex64> {
        if creators.len() != self.r || annihilators.len() != self.r {
            return Err(Error::Incompatible(format!(
                "element of an order-{} matrix needs {} indices per side",
                self.r, self.r
            )));
        }
        if let Some(&index) = creators
            .iter()
            .chain(annihilators)
            .find(|&&i| i >= self.basis.len())
        {
            return Err(Error::BasisMismatch {
                index,
                size: self.basis.len(),
            });
        }
        let k = self.basis.len();
        let mut i = creators.to_vec();
        let mut j = annihilators.to_vec();
        let (Some(si), Some(sj)) = (sort_with_sign(&mut i), sort_with_sign(&mut j)) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        Ok(self.matrix[(tuple_rank(k, &i), tuple_rank(k, &j))] * f64::from(si * sj))
    }

    /// Full trace `Σ_I Γ^I_I` over all index tuples; equals `C(N, r)`.
    pub fn trace(&self) -> f64 {
        factorial(self.r) * self.matrix.trace().re
    }

    /// `Σ Γ^J_I Γ^I_J` over all index tuples.
    pub fn purity(&self) -> f64 {
        let f = factorial(self.r);
        f * f * frobenius_sq(&self.matrix)
    }
}

/// Applies `c_{j_r} … c_{j_1}` (with `j_1` acting first) in place.
fn annihilate(det: &mut SlaterDeterminant, js: &[usize]) -> Option<i8> {
    let mut sign = 1i8;
    for &j in js {
        if !det.is_occupied(j) {
            return None;
        }
        if det.occupied_below(j) % 2 == 1 {
            sign = -sign;
        }
        det.flip(j);
    }
    Some(sign)
}

/// Applies `c†_{i_1} … c†_{i_r}` (with `i_r` acting first) in place.
fn create(det: &mut SlaterDeterminant, is: &[usize]) -> Option<i8> {
    let mut sign = 1i8;
    for &i in is.iter().rev() {
        if det.is_occupied(i) {
            return None;
        }
        if det.occupied_below(i) % 2 == 1 {
            sign = -sign;
        }
        det.flip(i);
    }
    Some(sign)
}

fn check_order(rho: &DensityMatrixExpansion, r: usize) -> Result<()> {
    let n = rho.n_electrons();
    if r == 0 || r > n {
        Err(Error::OrderOutOfRange { r, n })
    } else {
        Ok(())
    }
}

/// Builds the order-`r` reduced density matrix.
///
/// For each determinant `Φ_n` and each ascending set `J` of its occupied
/// orbitals, every ascending set `I` of orbitals empty after removing `J` is
/// tried; when `c†_I c_J Φ_n = ±Φ_m` lands inside the expansion the term
/// `± a_nm` is added to `Γ^J_I`. Summation order is fixed, so results are
/// bitwise reproducible.
pub fn build_rdm(rho: &DensityMatrixExpansion, r: usize) -> Result<ReducedDensityMatrix> {
    check_order(rho, r)?;
    let k = rho.n_orbitals();
    let index: BTreeMap<&SlaterDeterminant, usize> =
        rho.dets().iter().enumerate().map(|(i, d)| (d, i)).collect();
    let a = rho.coeffs();
    let dim = binomial(k, r);
    let mut matrix = CMatrix::zeros(dim, dim);
    for (n, phi) in rho.dets().iter().enumerate() {
        let occ: Vec<usize> = phi.occupied().collect();
        for js in occ.iter().copied().combinations(r) {
            let mut hole = phi.clone();
            let sj = annihilate(&mut hole, &js).expect("annihilating occupied orbitals");
            let col = tuple_rank(k, &js);
            let empty: Vec<usize> = hole.unoccupied().collect();
            for is in empty.iter().copied().combinations(r) {
                let mut out = hole.clone();
                let si = create(&mut out, &is).expect("creating in empty orbitals");
                if let Some(&m) = index.get(&out) {
                    matrix[(tuple_rank(k, &is), col)] += a[(n, m)] * f64::from(si * sj);
                }
            }
        }
    }
    matrix.scale_mut(1.0 / factorial(r));
    Ok(ReducedDensityMatrix {
        r,
        n_electrons: rho.n_electrons(),
        basis: rho.basis().clone(),
        matrix,
    })
}

/// Reference construction that evaluates every matrix element
/// `⟨Φ_m| c†_I c_J |Φ_n⟩` with [`apply_operator_string`].
///
/// Cost grows as `C(K, r)² M²`; intended for cross-checks on small systems.
pub fn build_rdm_exhaustive(
    rho: &DensityMatrixExpansion,
    r: usize,
) -> Result<ReducedDensityMatrix> {
    check_order(rho, r)?;
    let k = rho.n_orbitals();
    let tuples = ascending_tuples(k, r);
    let a = rho.coeffs();
    let dim = tuples.len();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (row, is) in tuples.iter().enumerate() {
        for (col, js) in tuples.iter().enumerate() {
            let op = OperatorString::excitation(is, js);
            let mut sum = Complex64::new(0.0, 0.0);
            for (n, phi_n) in rho.dets().iter().enumerate() {
                let Some((sign, out)) = apply_operator_string(&op, phi_n)? else {
                    continue;
                };
                for (m, phi_m) in rho.dets().iter().enumerate() {
                    if *phi_m == out {
                        sum += a[(n, m)] * f64::from(sign);
                    }
                }
            }
            matrix[(row, col)] = sum / factorial(r);
        }
    }
    Ok(ReducedDensityMatrix {
        r,
        n_electrons: rho.n_electrons(),
        basis: rho.basis().clone(),
        matrix,
    })
}

/// Contracts an order-`r+1` matrix to order `r`:
/// `Γ_r = (r+1)/(N-r) Σ_k Γ_{r+1}[I k; J k]`.
pub fn contract(gamma: &ReducedDensityMatrix) -> Result<ReducedDensityMatrix> {
    let r1 = gamma.r;
    let n = gamma.n_electrons;
    if r1 < 2 {
        return Err(Error::OrderOutOfRange { r: r1 - 1, n });
    }
    let r = r1 - 1;
    if n == r {
        return Err(Error::InvalidParameter(format!(
            "cannot contract with N = r = {r}"
        )));
    }
    let k = gamma.basis.len();
    let tuples = ascending_tuples(k, r);
    let dim = tuples.len();
    let mut matrix = CMatrix::zeros(dim, dim);
    // Moving k from the end of an ascending tuple to its sorted place passes
    // every larger index.
    let insert = |t: &[usize], x: usize| -> Option<(usize, i8)> {
        if t.contains(&x) {
            return None;
        }
        let above = t.iter().filter(|&&y| y > x).count();
        let mut v: Vec<usize> = t.to_vec();
        v.push(x);
        v.sort_unstable();
        Some((tuple_rank(k, &v), if above % 2 == 0 { 1 } else { -1 }))
    };
    for (row, is) in tuples.iter().enumerate() {
        for (col, js) in tuples.iter().enumerate() {
            let mut sum = Complex64::new(0.0, 0.0);
            for x in 0..k {
                if let (Some((ri, si)), Some((rj, sj))) = (insert(is, x), insert(js, x)) {
                    sum += gamma.matrix[(ri, rj)] * f64::from(si * sj);
                }
            }
            matrix[(row, col)] = sum * ((r1 as f64) / ((n - r) as f64));
        }
    }
    Ok(ReducedDensityMatrix {
        r,
        n_electrons: n,
        basis: gamma.basis.clone(),
        matrix,
    })
}

/// Spectrum of the reduced density matrix in descending order, normalized so
/// the eigenvalues sum to the full trace `C(N, r)`.
pub fn eigenvalues(gamma: &ReducedDensityMatrix) -> Result<Vec<f64>> {
    let deviation = hermitian_deviation(&gamma.matrix);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let f = factorial(gamma.r);
    Ok(hermitian_eigenvalues(&gamma.matrix)
        .into_iter()
        .map(|x| x * f)
        .collect())
}

/// Unordered pair of ascending tuples `{I, J}` labelling a transition `c†_I c_J`
/// together with its adjoint.
pub type TransitionKey = (Vec<usize>, Vec<usize>);

/// The `r`-body transitions `c†_I c_J` with nonzero `⟨b| c†_I c_J |a⟩`.
///
/// Each transition is reported once as the canonical (smaller, larger)
/// ordering of `(I, J)`, so the support of `(a, b)` equals that of `(b, a)`.
pub fn coupling_support(
    a: &SlaterDeterminant,
    b: &SlaterDeterminant,
    r: usize,
) -> BTreeSet<TransitionKey> {
    let mut out = BTreeSet::new();
    let only_a: Vec<usize> = a.occupied().filter(|&i| !b.is_occupied(i)).collect();
    let only_b: Vec<usize> = b.occupied().filter(|&i| !a.is_occupied(i)).collect();
    let s = only_a.len();
    if a.n_electrons() != b.n_electrons() || s > r {
        return out;
    }
    let shared: Vec<usize> = a.occupied().filter(|&i| b.is_occupied(i)).collect();
    for extra in shared.into_iter().combinations(r - s) {
        let mut i: Vec<usize> = only_b.iter().chain(&extra).copied().collect();
        let mut j: Vec<usize> = only_a.iter().chain(&extra).copied().collect();
        i.sort_unstable();
        j.sort_unstable();
        out.insert(if i <= j { (i, j) } else { (j, i) });
    }
    out
}
