use nalgebra::DVector;
use rpurity_core::purity::purity_trace;
use rpurity_core::rdm::build_rdm;
use rpurity_core::vibronic::{
    normal_modes, propagate, relax_geometry, sample, sample_wigner, InitialState, LaserPulse,
    NuclearSample, PropagationSettings, Sampling, SshChain, SshParams, Trajectory, ENERGY_TOL,
};

fn relaxed() -> SshChain {
    relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap()
}

fn settings(t_final: f64, output_every: usize) -> PropagationSettings {
    PropagationSettings {
        t_final,
        dt: 0.01,
        output_every,
        label_every: 10,
    }
}

#[test]
fn relaxed_chain_is_dimerized_and_balanced() {
    let chain = relaxed();
    assert!(chain.ground_forces(&chain.displacements).amax() < 1e-6);
    let bonds: Vec<f64> = (0..3)
        .map(|j| chain.displacements[j + 1] - chain.displacements[j])
        .collect();
    assert!(bonds.windows(2).all(|w| w[0] * w[1] < 0.0));
    assert!(chain.displacements.sum().abs() < 1e-10);
    let gap = chain.homo_lumo_gap();
    assert!((2.0..6.0).contains(&gap), "gap {gap}");
}

#[test]
fn wigner_moments_match_mode_widths() {
    let chain = relaxed();
    let n = 4000;
    let ens = sample_wigner(&chain, n, 99).unwrap();
    let vars = ens.mode_variances();
    for (k, &(su, sp)) in vars.iter().enumerate() {
        let v = ens.modes.vectors.column(k);
        let q: Vec<f64> = ens
            .samples
            .iter()
            .map(|s| v.dot(&(&s.displacements - &chain.displacements)))
            .collect();
        let p: Vec<f64> = ens.samples.iter().map(|s| v.dot(&s.momenta)).collect();
        for (x, var) in [(q, su), (p, sp)] {
            let mean = x.iter().sum::<f64>() / n as f64;
            let s2 = x.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(
                mean.abs() < 3.0 * (var / n as f64).sqrt(),
                "mode {k} mean {mean}"
            );
            assert!(
                (s2 / var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(),
                "mode {k} variance ratio {}",
                s2 / var
            );
        }
        let mode_sum: f64 = v.iter().sum();
        assert!(mode_sum.abs() < 1e-8, "mode {k} moves the centre of mass");
    }
}

#[test]
fn zero_width_ground_state_is_stationary() {
    let chain = relaxed();
    let ens = sample(&chain, 1, Sampling::ZeroWidth).unwrap();
    let initial = InitialState::ground(4).unwrap();
    let series = propagate(&ens, &initial, None, &settings(50.0, 500)).unwrap();
    for (k, &p1) in series.p1().iter().enumerate() {
        assert!((p1 - 4.0).abs() < 1e-10, "P1 = {p1} at output {k}");
        assert!((series.p2()[k] - 6.0).abs() < 1e-10);
    }
    let (_, v) = chain.orbitals();
    let mut traj = Trajectory::new(&chain, &ens.samples[0], &initial, &v).unwrap();
    for _ in 0..5000 {
        traj.step(&chain, 0.01, None);
    }
    assert!((&traj.displacements - &chain.displacements).amax() < 1e-8);
}

#[test]
fn field_free_energy_is_conserved() {
    let chain = relaxed();
    let ens = sample_wigner(&chain, 2, 5).unwrap();
    let initial = InitialState::type_one(4, 0.75).unwrap();
    let (_, v) = chain.orbitals();
    for s in &ens.samples {
        let mut traj = Trajectory::new(&chain, s, &initial, &v).unwrap();
        let e0 = traj.total_energy(&chain);
        let mut worst = 0.0f64;
        for step in 1..=50_000 {
            traj.step(&chain, 0.01, None);
            if step % 500 == 0 {
                worst = worst.max((traj.total_energy(&chain) - e0).abs());
            }
        }
        assert!(worst < ENERGY_TOL, "energy drift {worst} eV over 500 fs");
        assert!(traj.orthonormality_error() < 1e-9);
    }
}

#[test]
fn trajectories_retrace_under_time_reversal() {
    let chain = relaxed();
    let ens = sample_wigner(&chain, 1, 6).unwrap();
    let initial = InitialState::type_two(4, 0.75).unwrap();
    let (_, v) = chain.orbitals();
    let mut traj = Trajectory::new(&chain, &ens.samples[0], &initial, &v).unwrap();
    let start = traj.displacements.clone();
    for _ in 0..10_000 {
        traj.step(&chain, 0.01, None);
    }
    assert!((&traj.displacements - &start).amax() > 1e-3);
    traj.reverse(&chain, None);
    for _ in 0..10_000 {
        traj.step(&chain, 0.01, None);
    }
    assert!((&traj.displacements - &start).amax() < 1e-6);
    assert!((&traj.momenta + &ens.samples[0].momenta).amax() < 1e-6);
}

#[test]
fn driven_trajectories_integrate_backwards() {
    let chain = relaxed();
    let ens = sample_wigner(&chain, 1, 6).unwrap();
    let initial = InitialState::ground(4).unwrap();
    let (_, v) = chain.orbitals();
    let pulse = LaserPulse::new(chain.homo_lumo_gap(), 0.05, 20.0, 10.0).unwrap();
    let mut traj = Trajectory::new(&chain, &ens.samples[0], &initial, &v).unwrap();
    traj.refresh_forces(&chain, Some(&pulse));
    let (start, rho0) = (traj.displacements.clone(), traj.density());
    for _ in 0..10_000 {
        traj.step(&chain, 0.01, Some(&pulse));
    }
    assert!((traj.density() - &rho0).camax() > 1e-4);
    for _ in 0..10_000 {
        traj.step(&chain, -0.01, Some(&pulse));
    }
    assert!((&traj.displacements - &start).amax() < 1e-6);
    assert!((traj.density() - rho0).camax() < 1e-8);
}

#[test]
fn zero_field_pulse_leaves_populations_flat() {
    let chain = relaxed();
    let ens = sample_wigner(&chain, 3, 8).unwrap();
    let initial = InitialState::ground(4).unwrap();
    let dark = LaserPulse::new(chain.homo_lumo_gap(), 0.0, 30.0, 10.0).unwrap();
    let series = propagate(&ens, &initial, Some(&dark), &settings(60.0, 1000)).unwrap();
    let free = propagate(&ens, &initial, None, &settings(60.0, 1000)).unwrap();
    assert_eq!(series.observation, free.observation);
    // only vibrational nonadiabaticity remains
    let first = &series.observation.orbital_populations[0];
    for row in &series.observation.orbital_populations {
        assert!(row.iter().zip(first).all(|(a, b)| (a - b).abs() < 1e-5));
    }
    assert!(series.p1().iter().all(|p| (p - 4.0).abs() < 1e-5));
}

#[test]
fn ensemble_reduced_matrices_keep_their_traces() {
    let chain = relaxed();
    let ens = sample_wigner(&chain, 4, 9).unwrap();
    let initial = InitialState::type_one(4, 0.75).unwrap();
    let series = propagate(&ens, &initial, None, &settings(40.0, 1000)).unwrap();
    for (k, rho) in series.densities.iter().enumerate() {
        assert!((series.rdm1[k].trace() - 4.0).abs() < 1e-8);
        assert!((series.rdm2[k].trace() - 6.0).abs() < 1e-8);
        assert!((rho.coeffs().trace().re - 1.0).abs() < 1e-8);
        assert!((purity_trace(&build_rdm(rho, 1).unwrap()) - series.p1()[k]).abs() < 1e-12);
    }
    assert!((series.p1()[0] - 4.0).abs() < 1e-9 && (series.p2()[0] - 6.0).abs() < 1e-9);
}

#[test]
fn unstable_geometry_is_rejected() {
    let params = SshParams {
        spring: 2.0,
        ..SshParams::default()
    };
    let flat = SshChain::new(params).unwrap();
    assert!(normal_modes(&flat).is_err());
    let off = NuclearSample {
        displacements: DVector::zeros(6),
        momenta: DVector::zeros(6),
    };
    let chain = relaxed();
    let initial = InitialState::ground(4).unwrap();
    assert!(Trajectory::new(&chain, &off, &initial, &chain.orbitals().1).is_err());
}
