mod support;

use num_rational::Ratio;
use proptest::prelude::*;
use rand::Rng;
use rpurity_core::densmat::{dephase, from_pure, nbody_purity, DensityMatrixExpansion, PureState};
use rpurity_core::fock::{
    apply_operator_string, coherence_order, Action, OperatorString, SlaterDeterminant,
};
use rpurity_core::purity::{
    carlson_keller_gap, limit_ledger, p1_closed_form, p2_closed_form, purity_trace,
};
use rpurity_core::rdm::{build_rdm, build_rdm_exhaustive, contract, eigenvalues};
use rpurity_core::{binomial, Complex64};
use support::*;

fn det_strategy(k: usize) -> impl Strategy<Value = SlaterDeterminant> {
    proptest::collection::vec(any::<bool>(), k).prop_map(move |bits| {
        SlaterDeterminant::from_occupied(
            k,
            &bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| i)
                .collect::<Vec<_>>(),
        )
        .unwrap()
    })
}

fn max_dev(rho: &DensityMatrixExpansion, r: usize) -> f64 {
    let fast = build_rdm(rho, r).unwrap();
    let oracle = oracle_rdm(rho, r);
    let k = rho.n_orbitals();
    let ts = tuples(k, r);
    let mut worst = 0.0f64;
    for (a, ti) in ts.iter().enumerate() {
        for (b, tj) in ts.iter().enumerate() {
            worst = worst.max((fast.element(ti, tj).unwrap() - oracle[(a, b)]).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn operator_strings_match_bitmask_ladder(
        det in det_strategy(10),
        ops in proptest::collection::vec((any::<bool>(), 0usize..10), 0..6),
    ) {
        let op = OperatorString::new(ops.iter().map(|&(c, i)| (if c { Action::Create } else { Action::Annihilate }, i)).collect());
        let lib = apply_operator_string(&op, &det).unwrap().map(|(s, d)| (f64::from(s), mask(&d)));
        prop_assert_eq!(lib, apply_ops(&ops, mask(&det)));
    }

    #[test]
    fn canonical_anticommutators(det in det_strategy(8), i in 0usize..8, j in 0usize..8) {
        // {c_i, c†_j} Φ = δ_ij Φ and {c_i, c_j} Φ = 0
        let run = |ops: Vec<(Action, usize)>| apply_operator_string(&OperatorString::new(ops), &det).unwrap();
        let mut acc: std::collections::BTreeMap<u64, f64> = Default::default();
        for out in [run(vec![(Action::Annihilate, i), (Action::Create, j)]), run(vec![(Action::Create, j), (Action::Annihilate, i)])].into_iter().flatten() {
            *acc.entry(mask(&out.1)).or_default() += f64::from(out.0);
        }
        acc.retain(|_, v| *v != 0.0);
        if i == j {
            prop_assert_eq!(acc.len(), 1);
            prop_assert_eq!(acc.get(&mask(&det)).copied(), Some(1.0));
        } else {
            prop_assert!(acc.is_empty());
        }
        let mut acc2 = 0.0;
        for out in [run(vec![(Action::Annihilate, i), (Action::Annihilate, j)]), run(vec![(Action::Annihilate, j), (Action::Annihilate, i)])].into_iter().flatten() {
            acc2 += f64::from(out.0);
        }
        prop_assert_eq!(acc2, 0.0);
    }

    #[test]
    fn rdm_matches_fock_oracle(seed in any::<u64>(), k in 4usize..=8, m in 1usize..=5, rank in 1usize..=3) {
        let mut g = rng(seed);
        let n = g.random_range(1..k);
        let m = m.min(binomial(k, n) as usize);
        let rho = { let dets = random_dets(&mut g, k, n, m); random_mixed(&mut g, &dets, rank) };
        for r in 1..=n.min(3) {
            prop_assert!(max_dev(&rho, r) < 1e-12);
            let ex = build_rdm_exhaustive(&rho, r).unwrap();
            prop_assert!((ex.matrix() - build_rdm(&rho, r).unwrap().matrix()).norm() < 1e-12);
            prop_assert!((purity_trace(&build_rdm(&rho, r).unwrap()) - oracle_purity(&rho, r)).abs() < 1e-10);
        }
    }

    #[test]
    fn contraction_and_trace(seed in any::<u64>(), m in 1usize..=6, rank in 1usize..=3) {
        let mut g = rng(seed);
        let rho = { let dets = random_dets(&mut g, 8, 4, m); random_mixed(&mut g, &dets, rank) };
        for r in 1..=3 {
            let lower = build_rdm(&rho, r).unwrap();
            let upper = build_rdm(&rho, r + 1).unwrap();
            prop_assert!((contract(&upper).unwrap().matrix() - lower.matrix()).norm() < 1e-10);
            prop_assert!((lower.trace() - binomial(4, r) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_forms_match_trace_on_disjoint_states(seed in any::<u64>()) {
        let rho = random_disjoint_state(&mut rng(seed));
        let p1 = purity_trace(&build_rdm(&rho, 1).unwrap());
        let p2 = purity_trace(&build_rdm(&rho, 2).unwrap());
        prop_assert!((p1_closed_form(&rho).unwrap().value - p1).abs() < 1e-10);
        prop_assert!((p2_closed_form(&rho).unwrap().value - p2).abs() < 1e-10);
    }

    #[test]
    fn purities_stay_within_bounds(seed in any::<u64>(), m in 1usize..=6, rank in 1usize..=4) {
        let mut g = rng(seed);
        let rho = { let dets = random_dets(&mut g, 8, 4, m); random_mixed(&mut g, &dets, rank) };
        let p1 = purity_trace(&build_rdm(&rho, 1).unwrap());
        let p2 = purity_trace(&build_rdm(&rho, 2).unwrap());
        let mm = m as f64;
        prop_assert!(p1 <= 4.0 + 1e-10 && p1 >= 4.0 / mm - 1e-10);
        prop_assert!(p2 <= 6.0 + 1e-10 && p2 >= 6.0 / mm - 1e-10);
        prop_assert!(nbody_purity(&rho) <= 1.0 + 1e-12);
    }
}

#[test]
fn carlson_keller_pure_states() {
    let mut g = rng(11);
    for _ in 0..100 {
        let m = g.random_range(2..=6);
        let rho = {
            let dets = random_dets(&mut g, 8, 4, m);
            random_pure(&mut g, &dets)
        };
        assert!(carlson_keller_gap(&rho, 1).unwrap().abs() < 1e-9);
        let nonzero = |r| -> Vec<f64> {
            eigenvalues(&build_rdm(&rho, r).unwrap())
                .unwrap()
                .into_iter()
                .filter(|x| x.abs() > 1e-10)
                .collect()
        };
        let (a, b) = (nonzero(1), nonzero(3));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}

#[test]
fn carlson_keller_mixed_states() {
    let mut g = rng(12);
    let hits = (0..100)
        .filter(|_| {
            let m = g.random_range(2..=6);
            let rank = g.random_range(2..=m);
            let rho = {
                let dets = random_dets(&mut g, 8, 4, m);
                random_mixed(&mut g, &dets, rank)
            };
            carlson_keller_gap(&rho, 1).unwrap().abs() > 1e-6
        })
        .count();
    assert!(hits >= 95, "{hits} of 100 mixed states show a gap");
}

#[test]
fn third_order_coherences_are_invisible() {
    let mut g = rng(13);
    let mut checked = 0;
    while checked < 200 {
        let dets = random_dets(&mut g, 8, 4, 4);
        if coherence_order(&dets[0], &dets[1]).unwrap() != 3 {
            continue;
        }
        let pops = simplex(&mut g, 4);
        let phases: Vec<f64> = (0..4).map(|_| g.random::<f64>() * 6.0).collect();
        let groups = [0, 0, 1, 1];
        let lambda = [g.random::<f64>(), g.random::<f64>()];
        let rho = block_state(&dets, &pops, &phases, &groups, &lambda);
        let off = dephase(&rho, |n, m| (n, m) == (0, 1)).unwrap();
        for r in 1..=2 {
            let a = purity_trace(&build_rdm(&rho, r).unwrap());
            let b = purity_trace(&build_rdm(&off, r).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
        checked += 1;
    }
}

#[test]
fn purities_are_invariant_under_orbital_rotations() {
    let mut g = rng(14);
    for _ in 0..5 {
        let m = g.random_range(1..=6);
        let rank = g.random_range(1..=m);
        let rho = {
            let dets = random_dets(&mut g, 8, 4, m);
            random_mixed(&mut g, &dets, rank)
        };
        let before: Vec<f64> = (1..=3)
            .map(|r| purity_trace(&build_rdm(&rho, r).unwrap()))
            .collect();
        for _ in 0..3 {
            let u = random_unitary(&mut g, 8);
            let rot = rho.rotate_orbitals(&u).unwrap();
            for r in 1..=3 {
                assert!((purity_trace(&build_rdm(&rot, r).unwrap()) - before[r - 1]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn ledger_values_are_exact() {
    let q = Ratio::<i64>::new;
    for n in 2..=6usize {
        for m in 1..=5usize {
            let nn = n as i64;
            let mi = m as i64;
            let pops = vec![q(1, mi); m];
            let orders = nalgebra::DMatrix::from_fn(m, m, |i, j| usize::from(i != j));
            let l1 = limit_ledger(&pops, &orders, n, 1).unwrap();
            assert_eq!(l1.max_value, q(nn, 1));
            assert_eq!(l1.absolute_min, q(nn, mi));
            assert_eq!(l1.min_value_given_populations, q(nn - 1, 1) + q(1, mi));
            assert_eq!(l1.delta1, q(1, 1) - q(1, mi));
            let l2 = limit_ledger(&pops, &orders, n, 2).unwrap();
            assert_eq!(l2.max_value, q(nn * (nn - 1) / 2, 1));
            assert_eq!(l2.absolute_min, q(nn * (nn - 1), 2 * mi));
            assert_eq!(l2.delta1, q(nn - 1, 1) * (q(1, 1) - q(1, mi)));
            assert_eq!(l2.delta2, q(1, 1) - q(1, mi));
        }
    }
}

#[test]
fn type_one_and_type_two_values() {
    let det = |s: &str| SlaterDeterminant::parse(s).unwrap();
    let c = |x: f64| Complex64::new(x, 0.0);
    for (other, p1_dephased, p2_dephased) in [("10101100", 3.625, 4.875), ("10101010", 3.25, 4.125)]
    {
        let rho = from_pure(
            &PureState::new(
                vec![det("11001100"), det(other)],
                vec![c(0.75f64.sqrt()), c(0.5)],
            )
            .unwrap(),
        );
        assert!(
            (purity_trace(&build_rdm(&rho, 1).unwrap())
                - if other == "10101100" { 4.0 } else { 3.25 })
            .abs()
                < 1e-12
        );
        let d = dephase(&rho, |_, _| true).unwrap();
        assert!((purity_trace(&build_rdm(&d, 1).unwrap()) - p1_dephased).abs() < 1e-12);
        assert!((purity_trace(&build_rdm(&d, 2).unwrap()) - p2_dephased).abs() < 1e-12);
    }
}
