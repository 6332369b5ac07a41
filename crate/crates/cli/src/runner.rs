use rayon::prelude::*;
use rpurity_core::fock::SpinOrbitalBasis;
use rpurity_core::vibronic::{
    accumulate, relax_geometry, run_trajectory, sample, Bootstrap, EnsembleSeries, InitialState,
    LaserPulse, Sampling, SshChain, TrajectoryRecord,
};

use crate::config::{Preset, SimulationConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{orbital_label, TimeSeries};

/// Results of a `simulate` run.
#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub config: SimulationConfig,
    pub chain: SshChain,
    pub laser: Option<LaserPulse>,
    pub series: EnsembleSeries,
    pub p1_stderr: Option<Vec<f64>>,
    pub p2_stderr: Option<Vec<f64>>,
    /// Largest field-free energy drift over all trajectories, when checked.
    pub max_energy_drift: Option<f64>,
}

impl SimulationOutput {
    pub fn time_series(&self) -> TimeSeries {
        let basis = SpinOrbitalBasis::spin_blocked(self.chain.n_sites());
        TimeSeries {
            orbital_labels: basis.orbitals().iter().map(orbital_label).collect(),
            observation: self.series.observation.clone(),
            p1_stderr: self.p1_stderr.clone(),
            p2_stderr: self.p2_stderr.clone(),
        }
    }
}

pub fn initial_state(cfg: &SimulationConfig) -> CliResult<InitialState> {
    let n = cfg.chain.n_sites;
    let w = cfg.initial.ground_weight;
    Ok(match cfg.preset {
        Preset::Type1 => InitialState::type_one(n, w)?,
        Preset::Type2 => InitialState::type_two(n, w)?,
        Preset::Photoexcitation => InitialState::ground(n)?,
    })
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

/// Runs the configured experiment. Trajectories are spread over `threads`
/// workers; every reduction runs in trajectory order, so the output does not
/// depend on the thread count.
pub fn run_simulation(
    cfg: &SimulationConfig,
    threads: Option<usize>,
) -> CliResult<SimulationOutput> {
    if cfg.ensemble.n_trajectories == 0 {
        return Err(CliError::Input(
            "ensemble.n_trajectories must be at least 1".into(),
        ));
    }
    let settings = cfg.propagation.settings();
    settings.validate()?;
    let chain = relax_geometry(&SshChain::new(cfg.chain.params())?)?;
    let sampling = if cfg.ensemble.zero_width {
        Sampling::ZeroWidth
    } else {
        Sampling::Wigner {
            seed: cfg.ensemble.seed,
        }
    };
    let ensemble = sample(&chain, cfg.ensemble.n_trajectories, sampling)?;
    let initial = initial_state(cfg)?;
    let laser = match cfg.preset {
        Preset::Photoexcitation => Some(cfg.laser.pulse(chain.homo_lumo_gap())?),
        _ => None,
    };
    let pool = pool(threads)?;
    let records: Vec<TrajectoryRecord> = pool.install(|| {
        (0..ensemble.len())
            .into_par_iter()
            .map(|k| run_trajectory(&ensemble, k, &initial, laser.as_ref(), &settings))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let series = accumulate(&records, &initial, &settings)?;
    let (p1_stderr, p2_stderr) = if cfg.bootstrap.resamples == 0 {
        (None, None)
    } else {
        let boot = Bootstrap::new(
            &series.label_space,
            records.len(),
            cfg.bootstrap.resamples,
            cfg.bootstrap.seed,
        )?;
        let errs: Vec<(f64, f64)> = pool.install(|| {
            (0..series.times.len())
                .into_par_iter()
                .map(|s| boot.stderr_at(&records, s))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let (a, b) = errs.into_iter().unzip();
        (Some(a), Some(b))
    };
    let max_energy_drift = records
        .iter()
        .filter_map(|r| r.max_energy_drift)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    Ok(SimulationOutput {
        config: cfg.clone(),
        chain,
        laser,
        series,
        p1_stderr,
        p2_stderr,
        max_energy_drift,
    })
}
