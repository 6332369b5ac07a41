//! r-body purities `P_r = Tr[Γ_r²]`, their one- and two-body closed forms and
//! the limiting values they can take.
//!
//! The closed forms split each purity into a part fixed by the determinant
//! populations and a nonnegative part carried by coherences:
//!
//! ```text
//! P1 = N - 2 Σ_{n>m} a_nn a_mm s_nm                + 2 Σ_{n>m} |a_nm|² δ(s_nm, 1)
//! P2 = N(N-1)/2 - Σ_{n>m} a_nn a_mm s_nm (2N-s_nm-1) + 2 Σ_{n>m} |a_nm|² [δ(s_nm, 1)(N-1) + δ(s_nm, 2)]
//! ```
//!
//! They are exact whenever no two coherent determinant pairs couple through
//! the same r-body transition; [`closed_form_is_exact`] checks that
//! condition. A pair of orbital-disjoint excitations sharing a spectator, for
//! example, interferes in the one-body matrix and the formulas then miss the
//! cross term.

use alloc::collections::BTreeSet;
use alloc::format;

use nalgebra::DMatrix;
use num_traits::{FromPrimitive, Num};

use crate::densmat::{dephase, DensityMatrixExpansion};
use crate::rdm::{build_rdm, coupling_support, ReducedDensityMatrix};
use crate::{Error, Result};

fn lift<T: FromPrimitive>(x: usize) -> T {
    T::from_usize(x).expect("small integers are representable")
}

/// Purity with its split into population and coherence contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct PurityReport {
    pub r: usize,
    pub value: f64,
    pub population_term: f64,
    pub coherence_term: f64,
    /// Limiting values; only defined for `r = 1` and `r = 2`.
    pub limits: Option<LimitLedger<f64>>,
}

/// Limiting values of `P1` or `P2` for a given electron count, determinant
/// count and set of populations.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitLedger<T> {
    pub r: usize,
    pub n_electrons: usize,
    pub n_dets: usize,
    /// `N` for `r = 1`, `N(N-1)/2` for `r = 2`.
    pub max_value: T,
    /// Lowest value reachable with any populations: `N/M` or `N(N-1)/(2M)`.
    pub absolute_min: T,
    /// Value after losing every coherence between determinants one transition
    /// apart: `N - 1 + Σ a²` or `N(N-1)/2 - (N-1)(1 - Σ a²)`.
    pub min_value_given_populations: T,
    /// Two-body value of a coherent superposition of determinants two
    /// transitions apart, `N(N-1)/2 - 2(N-2)(1 - Σ a²)`.
    pub second_order_coherent_value: Option<T>,
    /// Two-body value after losing the coherences of that superposition,
    /// `N(N-1)/2 - (2N-3)(1 - Σ a²)`.
    pub second_order_incoherent_value: Option<T>,
    /// Values below this require coherence orders above `r`:
    /// `N - Δ1` for `r = 1`, `N(N-1)/2 - (2N-3)` for `r = 2`.
    pub higher_order_threshold: T,
    /// Closed form with every coherence set to zero.
    pub fully_incoherent_value: T,
    /// Closed form with every `|a_nm|² = a_nn a_mm`.
    pub fully_coherent_value: T,
    /// Largest decay from first-order decoherence.
    pub delta1: T,
    /// Largest decay from second-order decoherence; zero for `r = 1`.
    pub delta2: T,
}

/// Population and coherence terms of the closed form of order `r`.
///
/// `coherence_sq(n, m)` supplies `|a_nm|²` for `n > m`.
pub fn closed_form_terms<T>(
    r: usize,
    n_electrons: usize,
    populations: &[T],
    orders: &DMatrix<usize>,
    coherence_sq: impl Fn(usize, usize) -> T,
) -> Result<(T, T)>
where
    T: Num + Copy + FromPrimitive,
{
    let n = n_electrons;
    let (mut pop, mut coh) = match r {
        1 => (lift::<T>(n), T::zero()),
        2 => (lift::<T>(n * (n - 1) / 2), T::zero()),
        _ => return Err(Error::OrderOutOfRange { r, n: 2 }),
    };
    let two = lift::<T>(2);
    for i in 0..populations.len() {
        for j in 0..i {
            let s = orders[(i, j)];
            let pp = populations[i] * populations[j];
            match r {
                1 => {
                    pop = pop - two * pp * lift(s);
                    if s == 1 {
                        coh = coh + two * coherence_sq(i, j);
                    }
                }
                _ => {
                    // s ≤ N so 2N - s - 1 never underflows for N ≥ 1.
                    pop = pop - pp * lift(s * (2 * n - s - 1));
                    let weight = match s {
                        1 => n - 1,
                        2 => 1,
                        _ => 0,
                    };
                    if weight > 0 {
                        coh = coh + two * coherence_sq(i, j) * lift(weight);
                    }
                }
            }
        }
    }
    Ok((pop, coh))
}

/// `Σ Γ^J_I Γ^I_J` over all index tuples, equal to the sum of squared eigenvalues.
pub fn purity_trace(gamma: &ReducedDensityMatrix) -> f64 {
    gamma.purity()
}

fn closed_form_report(rho: &DensityMatrixExpansion, r: usize) -> Result<PurityReport> {
    let pops = rho.populations();
    let orders = rho.orders();
    let a = rho.coeffs();
    let (population_term, coherence_term) =
        closed_form_terms(r, rho.n_electrons(), &pops, &orders, |i, j| {
            a[(i, j)].norm_sqr()
        })?;
    Ok(PurityReport {
        r,
        value: population_term + coherence_term,
        population_term,
        coherence_term,
        limits: Some(limit_ledger(&pops, &orders, rho.n_electrons(), r)?),
    })
}

/// One-body purity from the closed form.
pub fn p1_closed_form(rho: &DensityMatrixExpansion) -> Result<PurityReport> {
    closed_form_report(rho, 1)
}

/// Two-body purity from the closed form.
pub fn p2_closed_form(rho: &DensityMatrixExpansion) -> Result<PurityReport> {
    closed_form_report(rho, 2)
}

/// Purity of any order from explicit reduced density matrices.
///
/// The population term is the purity of the fully dephased state and the
/// coherence term is the remainder, which matches the closed-form split for
/// `r ≤ 2` whenever the closed forms are exact.
pub fn purity_report(rho: &DensityMatrixExpansion, r: usize) -> Result<PurityReport> {
    let value = purity_trace(&build_rdm(rho, r)?);
    let population_term = purity_trace(&build_rdm(&dephase(rho, |_, _| true)?, r)?);
    let limits = if r <= 2 {
        Some(limit_ledger(
            &rho.populations(),
            &rho.orders(),
            rho.n_electrons(),
            r,
        )?)
    } else {
        None
    };
    Ok(PurityReport {
        r,
        value,
        population_term,
        coherence_term: value - population_term,
        limits,
    })
}

/// Whether the closed forms of order `r` reproduce the trace exactly.
///
/// True when the r-body transitions of distinct coherent pairs never
/// coincide, so no two coherences feed the same reduced matrix element.
pub fn closed_form_is_exact(rho: &DensityMatrixExpansion, r: usize) -> bool {
    let a = rho.coeffs();
    let dets = rho.dets();
    let mut seen = BTreeSet::new();
    for i in 0..dets.len() {
        for j in 0..i {
            if a[(i, j)].norm_sqr() == 0.0 {
                continue;
            }
            for key in coupling_support(&dets[i], &dets[j], r) {
                if !seen.insert(key) {
                    return false;
                }
            }
        }
    }
    true
}

/// Limiting values of the order-`r` purity for `r = 1` or `r = 2`.
///
/// `populations` are the `a_nn` (summing to one) and `orders` the matrix of
/// coherence orders between the determinants. Works in any numeric type with
/// exact small-integer conversion, including rationals.
pub fn limit_ledger<T>(
    populations: &[T],
    orders: &DMatrix<usize>,
    n_electrons: usize,
    r: usize,
) -> Result<LimitLedger<T>>
where
    T: Num + Copy + FromPrimitive,
{
    let m = populations.len();
    if m == 0 || orders.nrows() != m || orders.ncols() != m {
        return Err(Error::Incompatible(format!(
            "{m} populations with a {}x{} order matrix",
            orders.nrows(),
            orders.ncols()
        )));
    }
    let n = n_electrons;
    let one = T::one();
    let sum_sq = populations.iter().fold(T::zero(), |acc, &p| acc + p * p);
    let spread = one - sum_sq;
    let inv_m = one / lift(m);
    let (inc_pop, _) = closed_form_terms(r, n, populations, orders, |_, _| T::zero())?;
    let (coh_pop, coh_coh) = closed_form_terms(r, n, populations, orders, |i, j| {
        populations[i] * populations[j]
    })?;
    let ledger = match r {
        1 => {
            let max_value = lift::<T>(n);
            let delta1 = one - inv_m;
            LimitLedger {
                r,
                n_electrons: n,
                n_dets: m,
                max_value,
                absolute_min: max_value * inv_m,
                min_value_given_populations: lift::<T>(n) - one + sum_sq,
                second_order_coherent_value: None,
                second_order_incoherent_value: None,
                higher_order_threshold: max_value - delta1,
                fully_incoherent_value: inc_pop,
                fully_coherent_value: coh_pop + coh_coh,
                delta1,
                delta2: T::zero(),
            }
        }
        _ => {
            let max_value = lift::<T>(n * (n - 1) / 2);
            let nm1 = lift::<T>(n.saturating_sub(1));
            let two_n_m3 = lift::<T>(2 * n) - lift::<T>(3);
            LimitLedger {
                r,
                n_electrons: n,
                n_dets: m,
                max_value,
                absolute_min: max_value * inv_m,
                min_value_given_populations: max_value - nm1 * spread,
                second_order_coherent_value: Some(
                    max_value - lift::<T>(2) * (lift::<T>(n) - lift::<T>(2)) * spread,
                ),
                second_order_incoherent_value: Some(max_value - two_n_m3 * spread),
                higher_order_threshold: max_value - two_n_m3,
                fully_incoherent_value: inc_pop,
                fully_coherent_value: coh_pop + coh_coh,
                delta1: nm1 * (one - inv_m),
                delta2: one - inv_m,
            }
        }
    };
    Ok(ledger)
}

/// `P_{N-r} - P_r`, which vanishes for every pure state.
pub fn carlson_keller_gap(rho: &DensityMatrixExpansion, r: usize) -> Result<f64> {
    let n = rho.n_electrons();
    if r == 0 || r >= n {
        return Err(Error::OrderOutOfRange {
            r,
            n: n.saturating_sub(1),
        });
    }
    if 2 * r == n {
        return Ok(0.0);
    }
    Ok(purity_trace(&build_rdm(rho, n - r)?) - purity_trace(&build_rdm(rho, r)?))
}
