//! Ensemble propagation and trajectory averaging.
//!
//! Each trajectory yields amplitudes on the full determinant space of its
//! spin sector, written in the adiabatic orbitals of its own geometry. The
//! ensemble state at an output time is `a_nm = ⟨ψ_n ψ_m*⟩` over trajectories,
//! from which the one- and two-body RDMs and purities follow. All reductions
//! run in trajectory index order, so results do not depend on how the
//! trajectories were scheduled.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ehrenfest::{InitialState, Trajectory};
use super::laser::LaserPulse;
use super::wigner::TrajectoryEnsemble;
use crate::densmat::DensityMatrixExpansion;
use crate::fock::{apply_operator_string, OperatorString, SlaterDeterminant, SpinOrbitalBasis};
use crate::linalg::CMatrix;
use crate::purity::purity_trace;
use crate::rdm::{build_rdm, ReducedDensityMatrix};
use crate::reconstruct::ObservationSeries;
use crate::{Error, Result};

/// Field-free energy drift (eV) above which a trajectory is flagged.
pub const ENERGY_TOL: f64 = 1e-4;
/// Largest tolerated deviation of the orbital overlap matrix from identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationSettings {
    /// Total simulated time (fs).
    pub t_final: f64,
    /// Time step (fs).
    pub dt: f64,
    /// Steps between recorded outputs.
    pub output_every: usize,
    /// Steps between refreshes of the adiabatic orbital labels.
    pub label_every: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            t_final: 400.0,
            dt: 0.01,
            output_every: 100,
            label_every: 10,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be nonnegative, got {}",
                self.t_final
            )));
        }
        if self.output_every == 0 || self.label_every == 0 {
            return Err(Error::InvalidParameter(
                "output and label intervals must be at least one step".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Step indices at which outputs are recorded.
    pub fn output_steps(&self) -> Vec<usize> {
        (0..=self.n_steps()).step_by(self.output_every).collect()
    }

    pub fn output_times(&self) -> Vec<f64> {
        self.output_steps()
            .into_iter()
            .map(|s| s as f64 * self.dt)
            .collect()
    }
}

/// First step at which a trajectory's field-free energy drifted past [`ENERGY_TOL`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyWarning {
    pub trajectory: usize,
    pub step: usize,
    pub time: f64,
    pub drift: f64,
}

/// Output of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    /// Label-space amplitudes at every output step, normalized to one.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Largest field-free energy drift seen at output steps, when checked.
    pub max_energy_drift: Option<f64>,
    pub energy_warning: Option<EnergyWarning>,
}

/// Propagates trajectory `index` of `ensemble`.
pub fn run_trajectory(
    ensemble: &TrajectoryEnsemble,
    index: usize,
    initial: &InitialState,
    laser: Option<&LaserPulse>,
    settings: &PropagationSettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    if let Some(l) = laser {
        l.validate()?;
    }
    let chain = &ensemble.reference;
    let sample = ensemble.samples.get(index).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "trajectory {index} outside an ensemble of {}",
            ensemble.len()
        ))
    })?;
    let (_, reference_orbitals) = chain.orbitals();
    let label_space = initial.label_space();
    let mut traj = Trajectory::new(chain, sample, initial, &reference_orbitals)?;
    traj.refresh_forces(chain, laser);
    let check_energy = laser.is_none_or(|l| l.amplitude == 0.0);
    let e0 = traj.total_energy(chain);
    let mut record = TrajectoryRecord {
        amplitudes: Vec::new(),
        max_energy_drift: check_energy.then_some(0.0),
        energy_warning: None,
    };
    let n_steps = settings.n_steps();
    for step in 0..=n_steps {
        if step > 0 {
            traj.step(chain, settings.dt, laser);
            if step % settings.label_every == 0 {
                traj.update_labels(chain);
            }
        }
        if step % settings.output_every == 0 {
            if step % settings.label_every != 0 {
                traj.update_labels(chain);
            }
            let deviation = traj.orthonormality_error();
            if deviation > ORTHONORMALITY_TOL {
                return Err(Error::OrthonormalityLost { step, deviation });
            }
            if check_energy {
                let drift = (traj.total_energy(chain) - e0).abs();
                record.max_energy_drift = record.max_energy_drift.map(|m| m.max(drift));
                if drift > ENERGY_TOL && record.energy_warning.is_none() {
                    record.energy_warning = Some(EnergyWarning {
                        trajectory: index,
                        step,
                        time: traj.time,
                        drift,
                    });
                }
            }
            let mut amps = traj.label_amplitudes(initial, &label_space);
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|z| *z /= norm);
            record.amplitudes.push(amps);
        }
    }
    Ok(record)
}

/// Trajectory-averaged state and its reduced descriptions over time.
#[derive(Clone, Debug)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub n_trajectories: usize,
    pub label_space: Vec<SlaterDeterminant>,
    pub densities: Vec<DensityMatrixExpansion>,
    pub rdm1: Vec<ReducedDensityMatrix>,
    pub rdm2: Vec<ReducedDensityMatrix>,
    pub observation: ObservationSeries,
    pub warnings: Vec<EnergyWarning>,
}

impl EnsembleSeries {
    pub fn p1(&self) -> &[f64] {
        &self.observation.p1
    }

    pub fn p2(&self) -> &[f64] {
        self.observation.p2.as_deref().unwrap_or(&[])
    }
}

/// Averages trajectory records into the ensemble state at every output step.
pub fn accumulate(
    records: &[TrajectoryRecord],
    initial: &InitialState,
    settings: &PropagationSettings,
) -> Result<EnsembleSeries> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no trajectories to average".into()));
    }
    let times = settings.output_times();
    if records.iter().any(|r| r.amplitudes.len() != times.len()) {
        return Err(Error::Incompatible(
            "trajectory records disagree on the number of outputs".into(),
        ));
    }
    let label_space = initial.label_space();
    let basis = SpinOrbitalBasis::spin_blocked(initial.n_sites());
    let m = label_space.len();
    let scale = 1.0 / records.len() as f64;
    let (mut densities, mut rdm1, mut rdm2) = (Vec::new(), Vec::new(), Vec::new());
    let (mut pops, mut p1, mut p2) = (Vec::new(), Vec::new(), Vec::new());
    for step in 0..times.len() {
        let mut a = CMatrix::zeros(m, m);
        for rec in records {
            let psi = &rec.amplitudes[step];
            for i in 0..m {
                for j in 0..m {
                    a[(i, j)] += psi[i] * psi[j].conj();
                }
            }
        }
        a *= Complex64::new(scale, 0.0);
        let rho = DensityMatrixExpansion::new(label_space.clone(), a)?.with_basis(basis.clone())?;
        let d1 = build_rdm(&rho, 1)?;
        let d2 = build_rdm(&rho, 2)?;
        pops.push(
            (0..d1.matrix().nrows())
                .map(|k| d1.matrix()[(k, k)].re)
                .collect(),
        );
        p1.push(purity_trace(&d1));
        p2.push(purity_trace(&d2));
        densities.push(rho);
        rdm1.push(d1);
        rdm2.push(d2);
    }
    let observation = ObservationSeries::new(times.clone(), pops, p1, Some(p2))?;
    let warnings = records.iter().filter_map(|r| r.energy_warning).collect();
    Ok(EnsembleSeries {
        times,
        n_trajectories: records.len(),
        label_space,
        densities,
        rdm1,
        rdm2,
        observation,
        warnings,
    })
}

/// Runs every trajectory of the ensemble in order and averages them.
pub fn propagate(
    ensemble: &TrajectoryEnsemble,
    initial: &InitialState,
    laser: Option<&LaserPulse>,
    settings: &PropagationSettings,
) -> Result<EnsembleSeries> {
    let records = (0..ensemble.len())
        .map(|k| run_trajectory(ensemble, k, initial, laser, settings))
        .collect::<Result<Vec<_>>>()?;
    accumulate(&records, initial, settings)
}

/// Drives the relaxed chain from its ground state with `laser`.
pub fn photoexcitation_experiment(
    ensemble: &TrajectoryEnsemble,
    laser: &LaserPulse,
    settings: &PropagationSettings,
) -> Result<EnsembleSeries> {
    let initial = InitialState::ground(ensemble.reference.n_sites())?;
    propagate(ensemble, &initial, Some(laser), settings)
}

/// Sparse map from determinant pairs to reduced-density-matrix entries:
/// `Tr(ρ c†_I c_J) = Σ sign · a_nm` over the entries sharing a slot.
#[derive(Clone, Debug)]
struct TransitionTable {
    slots: usize,
    entries: Vec<(usize, usize, usize, f64)>,
}

impl TransitionTable {
    fn new(space: &[SlaterDeterminant], r: usize) -> Result<Self> {
        use itertools::Itertools;
        let index: BTreeMap<&SlaterDeterminant, usize> =
            space.iter().enumerate().map(|(i, d)| (d, i)).collect();
        let mut slot_of: BTreeMap<(Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        let mut entries = Vec::new();
        for (n, det) in space.iter().enumerate() {
            for ann in det.occupied().combinations(r) {
                let mut free: Vec<usize> = det.unoccupied().collect();
                free.extend(ann.iter().copied());
                free.sort_unstable();
                for cre in free.into_iter().combinations(r) {
                    let op = OperatorString::excitation(&cre, &ann);
                    if let Some((sign, out)) = apply_operator_string(&op, det)? {
                        if let Some(&m) = index.get(&out) {
                            let next = slot_of.len();
                            let slot = *slot_of.entry((cre.clone(), ann.clone())).or_insert(next);
                            entries.push((slot, n, m, f64::from(sign)));
                        }
                    }
                }
            }
        }
        Ok(Self {
            slots: slot_of.len(),
            entries,
        })
    }

    /// Real and imaginary parts of every slot for the pure state `psi`.
    fn fill(&self, psi: &[Complex64], out: &mut [f64]) {
        out.fill(0.0);
        for &(slot, n, m, sign) in &self.entries {
            let v = psi[n] * psi[m].conj() * sign;
            out[2 * slot] += v.re;
            out[2 * slot + 1] += v.im;
        }
    }
}

/// Trajectory bootstrap for purity error bars.
///
/// Every resample redraws trajectories with replacement; the same resamples
/// are used at every output step.
#[derive(Clone, Debug)]
pub struct Bootstrap {
    weights: DMatrix<f64>,
    tables: [TransitionTable; 2],
}

impl Bootstrap {
    pub fn new(
        label_space: &[SlaterDeterminant],
        n_traj: usize,
        resamples: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_traj == 0 || resamples < 2 {
            return Err(Error::InvalidParameter(
                "bootstrap needs trajectories and at least two resamples".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = DMatrix::zeros(resamples, n_traj);
        let w = 1.0 / n_traj as f64;
        for b in 0..resamples {
            for _ in 0..n_traj {
                weights[(b, rng.random_range(0..n_traj))] += w;
            }
        }
        Ok(Self {
            weights,
            tables: [
                TransitionTable::new(label_space, 1)?,
                TransitionTable::new(label_space, 2)?,
            ],
        })
    }

    pub fn resamples(&self) -> usize {
        self.weights.nrows()
    }

    /// Bootstrap standard errors of `(P1, P2)` at output `step`.
    pub fn stderr_at(&self, records: &[TrajectoryRecord], step: usize) -> Result<(f64, f64)> {
        let n = self.weights.ncols();
        if records.len() != n {
            return Err(Error::Incompatible(format!(
                "bootstrap built for {n} trajectories, got {}",
                records.len()
            )));
        }
        let mut out = [0.0; 2];
        for (r, table) in self.tables.iter().enumerate() {
            let mut data = DMatrix::zeros(n, 2 * table.slots);
            let mut row = alloc::vec![0.0; 2 * table.slots];
            for (k, rec) in records.iter().enumerate() {
                let psi = rec.amplitudes.get(step).ok_or_else(|| {
                    Error::InvalidParameter(format!("output step {step} out of range"))
                })?;
                table.fill(psi, &mut row);
                data.row_mut(k).copy_from_slice(&row);
            }
            let resampled = &self.weights * data;
            let values: Vec<f64> = resampled.row_iter().map(|row| row.norm_squared()).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (values.len() - 1) as f64;
            out[r] = var.sqrt();
        }
        Ok((out[0], out[1]))
    }

    /// Ensemble purities computed through the sparse tables with uniform
    /// weights. Used to cross-check the bootstrap against the RDM route.
    pub fn purities_at(&self, records: &[TrajectoryRecord], step: usize) -> (f64, f64) {
        let n = records.len() as f64;
        let mut out = [0.0; 2];
        for (r, table) in self.tables.iter().enumerate() {
            let mut sum = alloc::vec![0.0; 2 * table.slots];
            let mut row = alloc::vec![0.0; 2 * table.slots];
            for rec in records {
                table.fill(&rec.amplitudes[step], &mut row);
                sum.iter_mut().zip(&row).for_each(|(s, v)| *s += v);
            }
            out[r] = sum.iter().map(|s| (s / n) * (s / n)).sum();
        }
        (out[0], out[1])
    }
}

#[cfg(test)]
mod tests {
    use super::super::ssh::{relax_geometry, SshChain, SshParams};
    use super::super::wigner::sample_wigner;
    use super::*;

    #[test]
    fn short_type_one_run_is_consistent() {
        let chain = relax_geometry(&SshChain::new(SshParams::default()).unwrap()).unwrap();
        let ensemble = sample_wigner(&chain, 6, 3).unwrap();
        let initial = InitialState::type_one(4, 0.75).unwrap();
        let settings = PropagationSettings {
            t_final: 5.0,
            ..Default::default()
        };
        let records: Vec<_> = (0..6)
            .map(|k| run_trajectory(&ensemble, k, &initial, None, &settings).unwrap())
            .collect();
        let series = accumulate(&records, &initial, &settings).unwrap();
        assert!((series.p1()[0] - 4.0).abs() < 1e-12);
        assert!((series.p2()[0] - 6.0).abs() < 1e-12);
        for d in &series.rdm1 {
            assert!((d.trace() - 4.0).abs() < 1e-10);
        }
        let boot = Bootstrap::new(&series.label_space, 6, 20, 1).unwrap();
        for step in 0..series.times.len() {
            let (q1, q2) = boot.purities_at(&records, step);
            assert!((q1 - series.p1()[step]).abs() < 1e-10);
            assert!((q2 - series.p2()[step]).abs() < 1e-10);
        }
        let (s1, s2) = boot.stderr_at(&records, 0).unwrap();
        assert!(s1 < 1e-10 && s2 < 1e-10);
        assert!(records
            .iter()
            .all(|r| r.max_energy_drift.unwrap() < ENERGY_TOL));
    }
}
