//! Shared generators and a brute-force Fock-space oracle for the
//! integration tests. The oracle works on raw occupation bitmasks and never
//! calls into the library's determinant algebra.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rpurity_core::densmat::DensityMatrixExpansion;
use rpurity_core::fock::{all_determinants, SlaterDeterminant};
use rpurity_core::purity::{closed_form_is_exact, purity_trace};
use rpurity_core::rdm::build_rdm;
use rpurity_core::reconstruct::{
    CoherenceModel, CoherenceRegime, ObservationSeries, PopulationConstraint,
};
use rpurity_core::{CMatrix, Complex64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `m` distinct determinants with `n` electrons in `k` spin orbitals.
pub fn random_dets(rng: &mut ChaCha8Rng, k: usize, n: usize, m: usize) -> Vec<SlaterDeterminant> {
    let mut all = all_determinants(k, n);
    all.shuffle(rng);
    all.truncate(m);
    all
}

/// Random normalized pure state over `dets`.
pub fn random_pure(rng: &mut ChaCha8Rng, dets: &[SlaterDeterminant]) -> DensityMatrixExpansion {
    random_mixed(rng, dets, 1)
}

/// `A A† / Tr(A A†)` for a Gaussian `M x rank` matrix `A`.
pub fn random_mixed(
    rng: &mut ChaCha8Rng,
    dets: &[SlaterDeterminant],
    rank: usize,
) -> DensityMatrixExpansion {
    let m = dets.len();
    let a = CMatrix::from_fn(m, rank, |_, _| gaussian(rng));
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    DensityMatrixExpansion::new(dets.to_vec(), rho / Complex64::new(tr, 0.0))
        .expect("valid density")
}

/// Block-structured state: determinants sharing a group label carry
/// coherences `λ_g sqrt(p_n p_m) e^{i(φ_n - φ_m)}`, all others none.
pub fn block_state(
    dets: &[SlaterDeterminant],
    populations: &[f64],
    phases: &[f64],
    groups: &[usize],
    lambda: &[f64],
) -> DensityMatrixExpansion {
    let m = dets.len();
    let coeffs = CMatrix::from_fn(m, m, |i, j| {
        if i == j {
            Complex64::new(populations[i], 0.0)
        } else if groups[i] == groups[j] {
            Complex64::from_polar(
                lambda[groups[i]] * (populations[i] * populations[j]).sqrt(),
                phases[i] - phases[j],
            )
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrixExpansion::new(dets.to_vec(), coeffs).expect("block states are positive")
}

/// Random populations on the simplex.
pub fn simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m)
        .map(|_| -(rng.random::<f64>().max(1e-12)).ln())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random state over `m ≤ 6` determinants (N = 4, K = 8) whose coherent
/// pairs all have order at most two and couple through distinct one- and
/// two-body transitions.
pub fn random_disjoint_state(rng: &mut ChaCha8Rng) -> DensityMatrixExpansion {
    loop {
        let m = rng.random_range(2..=6);
        let dets = random_dets(rng, 8, 4, m);
        let n_groups = rng.random_range(1..=m);
        let groups: Vec<usize> = (0..m).map(|_| rng.random_range(0..n_groups)).collect();
        let lambda: Vec<f64> = (0..n_groups).map(|_| rng.random::<f64>()).collect();
        let pops = simplex(rng, m);
        let phases: Vec<f64> = (0..m)
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        let rho = block_state(&dets, &pops, &phases, &groups, &lambda);
        let low_order =
            (0..m).all(|i| (0..i).all(|j| groups[i] != groups[j] || rho.orders()[(i, j)] <= 2));
        if low_order && closed_form_is_exact(&rho, 1) && closed_form_is_exact(&rho, 2) {
            return rho;
        }
    }
}

/// Haar-like random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, k: usize) -> CMatrix {
    let g = CMatrix::from_fn(k, k, |_, _| gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(k, k, |i, j| {
        if i == j {
            r[(i, i)] / r[(i, i)].norm()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

// --- Fock-space oracle -------------------------------------------------

pub fn mask(det: &SlaterDeterminant) -> u64 {
    det.occupied().fold(0u64, |m, i| m | (1 << i))
}

/// `c_i` or `c†_i` on a bitmask: sign `(-1)^(occupied orbitals below i)`.
pub fn ladder(create: bool, i: usize, state: (f64, u64)) -> Option<(f64, u64)> {
    let (sign, m) = state;
    let bit = 1u64 << i;
    if (m & bit != 0) == create {
        return None;
    }
    let below = (m & (bit - 1)).count_ones();
    let s = if below.is_multiple_of(2) { sign } else { -sign };
    Some((s, m ^ bit))
}

/// Applies `ops` right to left, as operator products act.
pub fn apply_ops(ops: &[(bool, usize)], m: u64) -> Option<(f64, u64)> {
    ops.iter()
        .rev()
        .try_fold((1.0, m), |st, &(c, i)| ladder(c, i, st))
}

/// Ascending `r`-tuples of `0..k` in lexicographic order.
pub fn tuples(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            go(i + 1, k, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, r, &mut Vec::new(), &mut out);
    out
}

fn fact(r: usize) -> f64 {
    (1..=r).map(|x| x as f64).product()
}

/// `(1/r!) Tr(ρ c†_{i1}…c†_{ir} c_{jr}…c_{j1})` for every pair of ascending tuples.
pub fn oracle_rdm(rho: &DensityMatrixExpansion, r: usize) -> DMatrix<Complex64> {
    let k = rho.n_orbitals();
    let ts = tuples(k, r);
    let masks: Vec<u64> = rho.dets().iter().map(mask).collect();
    let a = rho.coeffs();
    DMatrix::from_fn(ts.len(), ts.len(), |row, col| {
        let mut ops: Vec<(bool, usize)> = ts[row].iter().map(|&i| (true, i)).collect();
        ops.extend(ts[col].iter().rev().map(|&j| (false, j)));
        let mut sum = Complex64::new(0.0, 0.0);
        for (n, &mn) in masks.iter().enumerate() {
            if let Some((s, out)) = apply_ops(&ops, mn) {
                for (m, &mm) in masks.iter().enumerate() {
                    if mm == out {
                        sum += a[(n, m)] * s;
                    }
                }
            }
        }
        sum / fact(r)
    })
}

/// `(r!)² Σ |D_IJ|²` over ascending tuples.
pub fn oracle_purity(rho: &DensityMatrixExpansion, r: usize) -> f64 {
    fact(r).powi(2) * oracle_rdm(rho, r).iter().map(|z| z.norm_sqr()).sum::<f64>()
}

// --- Synthetic reconstruction scenarios --------------------------------

pub struct Scenario {
    pub model: CoherenceModel,
    pub decoys: Vec<CoherenceModel>,
    pub series: ObservationSeries,
}

fn observe(states: &[DensityMatrixExpansion], times: Vec<f64>) -> ObservationSeries {
    let mut pops = Vec::new();
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for rho in states {
        let g1 = build_rdm(rho, 1).unwrap();
        pops.push(
            (0..rho.n_orbitals())
                .map(|i| g1.element(&[i], &[i]).unwrap().re)
                .collect(),
        );
        p1.push(purity_trace(&g1));
        p2.push(purity_trace(&build_rdm(rho, 2).unwrap()));
    }
    ObservationSeries::new(times, pops, p1, Some(p2)).unwrap()
}

/// A random coherence model (N = 4, K = 8) together with a noiseless
/// observation series generated from a state that belongs to it.
///
/// Populations drift smoothly, free coherences decay at random rates and
/// fully coherent blocks stay pure. Models whose coherent pairs share
/// transitions are redrawn.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    loop {
        let m = rng.random_range(2..=4);
        let dets = random_dets(rng, 8, 4, m);
        let n_groups = rng.random_range(1..=m);
        let groups: Vec<usize> = (0..m).map(|_| rng.random_range(0..n_groups)).collect();
        // 0: zero, 1: full, 2: free
        let kinds: Vec<u8> = (0..n_groups).map(|_| rng.random_range(0..3u8)).collect();
        let regime = |i: usize, j: usize| {
            if groups[i] != groups[j] {
                return CoherenceRegime::Zero;
            }
            match kinds[groups[i]] {
                0 => CoherenceRegime::Zero,
                1 => CoherenceRegime::Full,
                _ => CoherenceRegime::Free,
            }
        };
        let mut alpha: Vec<f64> = (0..m)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut beta: Vec<f64> = (0..m)
            .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut constraints = Vec::new();
        if rng.random_bool(0.3) {
            let (a, b) = (0, 1 + rng.random_range(0..m - 1));
            alpha[b] = alpha[a];
            beta[b] = beta[a];
            constraints.push(PopulationConstraint::Equal(a, b));
        }
        let Ok(model) = CoherenceModel::new("generator", dets.clone(), constraints, regime) else {
            continue;
        };
        let decoy = CoherenceModel::new("free", dets.clone(), Vec::new(), |_, _| {
            CoherenceRegime::Free
        })
        .unwrap();
        let omega: Vec<f64> = (0..m)
            .map(|_| 10.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let rates: Vec<f64> = (0..n_groups).map(|_| 3.0 * rng.random::<f64>()).collect();
        let lambda0: Vec<f64> = (0..n_groups).map(|_| rng.random::<f64>()).collect();
        let times: Vec<f64> = (0..=20).map(|s| s as f64 / 20.0).collect();
        let states: Vec<DensityMatrixExpansion> = times
            .iter()
            .map(|&t| {
                let w: Vec<f64> = (0..m).map(|i| (alpha[i] + beta[i] * t).exp()).collect();
                let s: f64 = w.iter().sum();
                let pops: Vec<f64> = w.iter().map(|x| x / s).collect();
                let phases: Vec<f64> = omega.iter().map(|o| o * t).collect();
                let lambda: Vec<f64> = (0..n_groups)
                    .map(|g| match kinds[g] {
                        0 => 0.0,
                        1 => 1.0,
                        _ => lambda0[g] * (-rates[g] * t).exp(),
                    })
                    .collect();
                block_state(&dets, &pops, &phases, &groups, &lambda)
            })
            .collect();
        if !states
            .iter()
            .all(|rho| closed_form_is_exact(rho, 1) && closed_form_is_exact(rho, 2))
        {
            continue;
        }
        return Scenario {
            model,
            decoys: vec![decoy],
            series: observe(&states, times),
        };
    }
}
