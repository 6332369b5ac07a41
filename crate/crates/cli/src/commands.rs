//! Subcommands. Each returns its primary document so tests can drive the
//! same code paths as the binary.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use num_rational::Ratio;
use rpurity_core::densmat::{dephase, DensityMatrixExpansion};
use rpurity_core::fock::SlaterDeterminant;
use rpurity_core::purity::{
    closed_form_is_exact, limit_ledger, p1_closed_form, p2_closed_form, purity_report, purity_trace,
};
use rpurity_core::rdm::{build_rdm, build_rdm_exhaustive};
use rpurity_core::reconstruct::{
    discard, enumerate_candidates, photoexcitation_models, CoherenceModel, DiscardOptions,
    InitialPurities,
};
use serde::Serialize;

use crate::config::{Preset, SimulationConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{
    read_density, read_json, read_text, read_timeseries, sha256_hex, to_json_string, write_bytes,
    write_rdm_csv, write_timeseries, DensityMatrixDoc, LimitsDoc, ManifestDoc, ModelDoc, OutputDoc,
    PurityReportDoc, RdmDoc, VerdictDoc,
};
use crate::runner::{run_simulation, SimulationOutput};

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}

fn parse_orders(list: &[usize]) -> CliResult<Vec<usize>> {
    if list.is_empty() {
        return Err(CliError::Input("at least one order is required".into()));
    }
    Ok(list.to_vec())
}

#[derive(Args, Debug, Clone)]
pub struct PurityArgs {
    /// Density-matrix JSON file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Purity orders to report.
    #[arg(long = "r", value_delimiter = ',', default_value = "1,2")]
    pub orders: Vec<usize>,
    /// Compare against the exhaustive operator-string oracle and, for r ≤ 2, the closed forms.
    #[arg(long)]
    pub check: bool,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn purity(args: &PurityArgs) -> CliResult<Vec<PurityReportDoc>> {
    let rho = read_density(&args.input)?;
    let orders = parse_orders(&args.orders)?;
    let docs = orders
        .iter()
        .map(|&r| purity_doc(&rho, r, args.check))
        .collect::<CliResult<Vec<_>>>()?;
    emit(args.output.as_deref(), &to_json_string(&docs)?)?;
    Ok(docs)
}

/// Purity report of order `r`, with the oracle comparison when `check` is set.
pub fn purity_doc(
    rho: &DensityMatrixExpansion,
    r: usize,
    check: bool,
) -> CliResult<PurityReportDoc> {
    let report = purity_report(rho, r)?;
    let mut doc = PurityReportDoc::from_report(&report);
    if check {
        let fast = build_rdm(rho, r)?;
        let oracle = build_rdm_exhaustive(rho, r)?;
        let rdm_deviation = (fast.matrix() - oracle.matrix())
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        let purity_deviation = (report.value - purity_trace(&oracle)).abs();
        let exact = closed_form_is_exact(rho, r);
        let closed = match r {
            1 => Some(p1_closed_form(rho)?.value),
            2 => Some(p2_closed_form(rho)?.value),
            _ => None,
        };
        let closed_form_deviation = closed.map(|c| (c - report.value).abs());
        let mut max_deviation = rdm_deviation.max(purity_deviation);
        if exact {
            max_deviation = max_deviation.max(closed_form_deviation.unwrap_or(0.0));
        }
        doc.check = Some(crate::formats::CheckDoc {
            rdm_deviation,
            purity_deviation,
            closed_form_exact: exact,
            closed_form_deviation,
            max_deviation,
        });
    }
    Ok(doc)
}

#[derive(Args, Debug, Clone)]
pub struct RdmArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Order of the reduced density matrix.
    #[arg(long = "r", default_value_t = 1)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = RdmFormat::Json)]
    pub format: RdmFormat,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RdmFormat {
    Json,
    Csv,
}

pub fn rdm(args: &RdmArgs) -> CliResult<()> {
    let rho = read_density(&args.input)?;
    let gamma = build_rdm(&rho, args.order)?;
    let text = match args.format {
        RdmFormat::Json => to_json_string(&RdmDoc::from_rdm(&gamma))?,
        RdmFormat::Csv => {
            let mut buf = Vec::new();
            write_rdm_csv(&mut buf, &gamma)?;
            String::from_utf8(buf).map_err(|e| CliError::Runtime(e.to_string()))?
        }
    };
    emit(args.output.as_deref(), &text)
}

#[derive(Args, Debug, Clone)]
pub struct DephaseArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Remove every coherence.
    #[arg(long, conflicts_with_all = ["orders", "pairs"])]
    pub all: bool,
    /// Remove coherences between determinants whose coherence order is listed.
    #[arg(long, value_delimiter = ',')]
    pub orders: Vec<usize>,
    /// Remove the listed coherences, written `n:m` with determinant indices.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_pair(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Input(format!("--pairs: expected `n:m`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn dephase_cmd(args: &DephaseArgs) -> CliResult<DensityMatrixExpansion> {
    let rho = read_density(&args.input)?;
    if !args.all && args.orders.is_empty() && args.pairs.is_empty() {
        return Err(CliError::Input(
            "dephase: choose --all, --orders or --pairs".into(),
        ));
    }
    let pairs: BTreeSet<(usize, usize)> = args
        .pairs
        .iter()
        .map(|p| parse_pair(p))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    if let Some(&(_, b)) = pairs.iter().find(|&&(_, b)| b >= rho.len()) {
        return Err(CliError::Input(format!(
            "--pairs: index {b} outside {} determinants",
            rho.len()
        )));
    }
    let orders = rho.orders();
    let out = dephase(&rho, |n, m| {
        args.all || args.orders.contains(&orders[(n, m)]) || pairs.contains(&(n.min(m), n.max(m)))
    })?;
    emit(
        args.output.as_deref(),
        &to_json_string(&DensityMatrixDoc::from_expansion(&out))?,
    )?;
    Ok(out)
}

#[derive(Args, Debug, Clone)]
pub struct LimitsArgs {
    /// Number of electrons.
    #[arg(long = "N", alias = "n-electrons")]
    pub n_electrons: Option<usize>,
    /// Number of determinants.
    #[arg(long = "M", alias = "n-dets")]
    pub n_dets: Option<usize>,
    /// Determinant populations, decimals or fractions such as `3/4`; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    pub populations: Vec<String>,
    /// Coherence order assumed between every pair of determinants.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Take populations, orders and N from a density-matrix file instead.
    #[arg(long, short, conflicts_with_all = ["n_electrons", "n_dets", "populations"])]
    pub input: Option<PathBuf>,
    #[arg(long = "r", value_delimiter = ',', default_value = "1,2")]
    pub orders: Vec<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Limit values in exact rational form when the inputs allow it, and in decimals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitsEntry {
    pub r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<LimitsDoc<String>>,
    pub decimal: LimitsDoc<f64>,
}

/// Parses `0.75`, `-1.5`, `3/4` or `2` exactly.
pub fn parse_ratio(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0).then(|| Ratio::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac.len() > 17 {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let value = Ratio::new(digits, 10i64.checked_pow(frac.len() as u32)?);
    Some(if neg { -value } else { value })
}

fn ratio_string(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn limits(args: &LimitsArgs) -> CliResult<Vec<LimitsEntry>> {
    let (n, pops_text, orders): (usize, Vec<String>, DMatrix<usize>) = match &args.input {
        Some(path) => {
            let rho = read_density(path)?;
            let pops = rho.populations().iter().map(|p| p.to_string()).collect();
            (rho.n_electrons(), pops, rho.orders())
        }
        None => {
            let n = args
                .n_electrons
                .ok_or_else(|| CliError::Input("limits: --N is required".into()))?;
            let m = match (args.n_dets, args.populations.len()) {
                (Some(m), 0) => m,
                (Some(m), k) if k == m => m,
                (Some(m), k) => {
                    return Err(CliError::Input(format!(
                        "limits: --M is {m} but {k} populations were given"
                    )))
                }
                (None, 0) => {
                    return Err(CliError::Input("limits: give --M or --populations".into()))
                }
                (None, k) => k,
            };
            if m == 0 {
                return Err(CliError::Input("limits: --M must be positive".into()));
            }
            let pops = if args.populations.is_empty() {
                vec![format!("1/{m}"); m]
            } else {
                args.populations.clone()
            };
            let orders = DMatrix::from_fn(m, m, |i, j| if i == j { 0 } else { args.order });
            (n, pops, orders)
        }
    };
    let decimal: Vec<f64> = pops_text
        .iter()
        .map(|s| match parse_ratio(s) {
            Some(r) => Ok(*r.numer() as f64 / *r.denom() as f64),
            None => s
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("--populations: cannot parse `{s}`"))),
        })
        .collect::<CliResult<_>>()?;
    if decimal.iter().any(|&p| !(0.0..=1.0).contains(&p))
        || (decimal.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(CliError::Input(
            "--populations: values must lie in [0, 1] and sum to 1".into(),
        ));
    }
    let exact: Option<Vec<Ratio<i64>>> = if args.input.is_some() {
        None
    } else {
        pops_text.iter().map(|s| parse_ratio(s)).collect()
    };
    let exact = exact.filter(|e| e.iter().copied().sum::<Ratio<i64>>() == Ratio::from_integer(1));
    let mut entries = Vec::new();
    for &r in &parse_orders(&args.orders)? {
        if !(1..=2).contains(&r) {
            return Err(CliError::Input(format!(
                "limits: order {r} is not supported; use 1 or 2"
            )));
        }
        let dec = limit_ledger(&decimal, &orders, n, r)?;
        let ex = match &exact {
            Some(e) => Some(LimitsDoc::from_ledger(
                &limit_ledger(e, &orders, n, r)?,
                ratio_string,
            )),
            None => None,
        };
        entries.push(LimitsEntry {
            r,
            exact: ex,
            decimal: LimitsDoc::from_ledger(&dec, |x| x),
        });
    }
    emit(args.output.as_deref(), &to_json_string(&entries)?)?;
    Ok(entries)
}

#[derive(Args, Debug, Clone)]
pub struct ReconstructArgs {
    /// Time-series CSV written by `simulate`.
    #[arg(long, short)]
    pub input: PathBuf,
    /// JSON list of coherence models. Defaults to the five photoexcitation models M1 to M5.
    #[arg(long, conflicts_with = "active")]
    pub models: Option<PathBuf>,
    /// Search all subsets of these determinants instead of using fixed models.
    #[arg(long, value_delimiter = ',')]
    pub active: Vec<String>,
    /// Largest subset size in the candidate search.
    #[arg(long, default_value_t = 4)]
    pub max_size: usize,
    /// Row of the time series used to screen candidates; the last row when absent.
    #[arg(long)]
    pub screen_row: Option<usize>,
    /// Allowed excursion outside a purity envelope. The default suits ensemble data;
    /// use 1e-6 for noiseless data.
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    /// Test every n-th time step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Known initial P1.
    #[arg(long)]
    pub initial_p1: Option<f64>,
    /// Known initial P2 (requires --initial-p1).
    #[arg(long, requires = "initial_p1")]
    pub initial_p2: Option<f64>,
    /// Also write the models that were tested.
    #[arg(long)]
    pub dump_models: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn reconstruct(args: &ReconstructArgs) -> CliResult<VerdictDoc> {
    let ts = read_timeseries(&read_text(&args.input)?)
        .map_err(|e| e.context(&args.input.display().to_string()))?;
    let obs = &ts.observation;
    let k = obs.n_orbitals();
    let mut diagnostic = None;
    let models: Vec<CoherenceModel> = if let Some(path) = &args.models {
        let docs: Vec<ModelDoc> = read_json(path)?;
        docs.iter()
            .map(ModelDoc::to_model)
            .collect::<CliResult<_>>()?
    } else if !args.active.is_empty() {
        let active = args
            .active
            .iter()
            .map(|s| {
                SlaterDeterminant::parse(s)
                    .map_err(|e| CliError::Input(format!("--active `{s}`: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let row = args.screen_row.unwrap_or(obs.len() - 1);
        let pops = obs.orbital_populations.get(row).ok_or_else(|| {
            CliError::Input(format!("--screen-row {row} outside {} rows", obs.len()))
        })?;
        let search = enumerate_candidates(&active, pops, args.max_size)?;
        diagnostic = search.diagnostic;
        search.models
    } else {
        if k % 2 == 1 {
            return Err(CliError::Input(format!(
                "{k} orbital columns cannot form a spin-blocked basis"
            )));
        }
        photoexcitation_models(k / 2)?
    };
    if models.is_empty() {
        return Err(CliError::Runtime(
            diagnostic.unwrap_or_else(|| "no candidate models".into()),
        ));
    }
    if let Some(m) = models.iter().find(|m| m.dets()[0].n_orbitals() != k) {
        return Err(CliError::Input(format!(
            "model {} uses {} orbitals but the series has {k}",
            m.name(),
            m.dets()[0].n_orbitals()
        )));
    }
    if let Some(path) = &args.dump_models {
        let docs: Vec<ModelDoc> = models.iter().map(ModelDoc::from_model).collect();
        write_bytes(path, to_json_string(&docs)?.as_bytes())?;
    }
    let opts = DiscardOptions {
        tol: args.tol,
        stride: args.stride,
        initial: args.initial_p1.map(|p1| InitialPurities {
            p1,
            p2: args.initial_p2,
        }),
    };
    let verdict = discard(&models, obs, &opts)?;
    let mut doc = VerdictDoc::from_verdict(&verdict, args.tol);
    if doc.diagnostic.is_none() {
        doc.diagnostic = diagnostic;
    }
    emit(args.output.as_deref(), &to_json_string(&doc)?)?;
    Ok(doc)
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimulateArgs {
    /// Experiment preset; optional when a config or manifest names one.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// TOML configuration; command-line flags override its values.
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Rerun the configuration recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write the ensemble density matrix and RDMs at every output time.
    #[arg(long)]
    pub dump_states: bool,

    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start all trajectories at the relaxed geometry with zero momenta.
    #[arg(long)]
    pub zero_width: bool,
    /// Simulated time in fs.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Time step in fs.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Steps between outputs.
    #[arg(long)]
    pub output_every: Option<usize>,
    /// Steps between refreshes of the adiabatic orbital labels.
    #[arg(long)]
    pub label_every: Option<usize>,
    /// Weight of the ground determinant in the type1/type2 superpositions.
    #[arg(long)]
    pub ground_weight: Option<f64>,
    #[arg(long)]
    pub n_sites: Option<usize>,
    /// Hopping t0 in eV.
    #[arg(long)]
    pub hopping: Option<f64>,
    /// Electron-phonon coupling in eV/Å.
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Spring constant in eV/Å².
    #[arg(long)]
    pub spring: Option<f64>,
    /// Site mass in eV·fs²/Å².
    #[arg(long)]
    pub mass: Option<f64>,
    /// Site spacing in Å, used for dipole positions.
    #[arg(long)]
    pub lattice_spacing: Option<f64>,
    /// Photon energy in eV; resonant with the computed gap when absent.
    #[arg(long)]
    pub photon_energy: Option<f64>,
    /// Peak field in V/Å.
    #[arg(long)]
    pub field_amplitude: Option<f64>,
    /// Time in fs at which the field reaches full amplitude.
    #[arg(long)]
    pub t_on: Option<f64>,
    /// Gaussian width in fs of the turn-on.
    #[arg(long)]
    pub turn_on_width: Option<f64>,
    /// Bootstrap resamples for error bars; 0 disables them.
    #[arg(long)]
    pub bootstrap_resamples: Option<usize>,
    #[arg(long)]
    pub bootstrap_seed: Option<u64>,
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

/// Resolves the run configuration from manifest, config file, preset and flags.
pub fn resolve_config(args: &SimulateArgs) -> CliResult<SimulationConfig> {
    let mut cfg = if let Some(path) = &args.manifest {
        let manifest: ManifestDoc = read_json(path)?;
        if manifest.command != "simulate" {
            return Err(CliError::Input(format!(
                "{}: manifest records `{}`, not simulate",
                path.display(),
                manifest.command
            )));
        }
        serde_json::from_value(manifest.config)
            .map_err(|e| CliError::Input(format!("{}: config: {e}", path.display())))?
    } else if let Some(path) = &args.config {
        SimulationConfig::read(path)?
    } else {
        let preset = args.preset.ok_or_else(|| {
            CliError::Input("simulate: give --preset, --config or --manifest".into())
        })?;
        SimulationConfig::preset(preset)
    };
    if let Some(p) = args.preset {
        if p != cfg.preset {
            return Err(CliError::Input(
                "simulate: --preset disagrees with the configuration file".into(),
            ));
        }
    }
    set!(cfg.ensemble.n_trajectories, args.n_traj);
    set!(cfg.ensemble.seed, args.seed);
    if args.zero_width {
        cfg.ensemble.zero_width = true;
    }
    set!(cfg.propagation.t_final, args.t_final);
    set!(cfg.propagation.dt, args.dt);
    set!(cfg.propagation.output_every, args.output_every);
    set!(cfg.propagation.label_every, args.label_every);
    set!(cfg.initial.ground_weight, args.ground_weight);
    set!(cfg.chain.n_sites, args.n_sites);
    set!(cfg.chain.hopping, args.hopping);
    set!(cfg.chain.coupling, args.coupling);
    set!(cfg.chain.spring, args.spring);
    set!(cfg.chain.mass, args.mass);
    set!(cfg.chain.lattice_spacing, args.lattice_spacing);
    if args.photon_energy.is_some() {
        cfg.laser.photon_energy = args.photon_energy;
    }
    set!(cfg.laser.amplitude, args.field_amplitude);
    set!(cfg.laser.t_on, args.t_on);
    set!(cfg.laser.width, args.turn_on_width);
    set!(cfg.bootstrap.resamples, args.bootstrap_resamples);
    set!(cfg.bootstrap.seed, args.bootstrap_seed);
    Ok(cfg)
}

/// File name of the time series inside the output directory.
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const STATES_FILE: &str = "states.jsonl";

#[derive(Serialize)]
struct StateLine {
    t_fs: f64,
    density: DensityMatrixDoc,
    rdm1: RdmDoc,
    rdm2: RdmDoc,
}

#[derive(Serialize)]
struct Derived {
    homo_lumo_gap: f64,
    tension: f64,
    photon_energy: Option<f64>,
    mode_energies: Vec<f64>,
    max_energy_drift: Option<f64>,
    outputs: usize,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<SimulationOutput> {
    let cfg = resolve_config(args)?;
    let out = run_simulation(&cfg, args.threads)?;
    let dir = &args.out_dir;
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut csv = Vec::new();
    write_timeseries(&mut csv, &out.time_series())?;
    files.push((TIMESERIES_FILE, csv));
    files.push((CONFIG_FILE, cfg.to_toml()?.into_bytes()));
    if args.dump_states {
        let mut text = String::new();
        for (i, &t) in out.series.times.iter().enumerate() {
            let line = StateLine {
                t_fs: t,
                density: DensityMatrixDoc::from_expansion(&out.series.densities[i]),
                rdm1: RdmDoc::from_rdm(&out.series.rdm1[i]),
                rdm2: RdmDoc::from_rdm(&out.series.rdm2[i]),
            };
            text.push_str(
                &serde_json::to_string(&line).map_err(|e| CliError::Runtime(e.to_string()))?,
            );
            text.push('\n');
        }
        files.push((STATES_FILE, text.into_bytes()));
    }
    let mut manifest = ManifestDoc::new("simulate", &cfg)?;
    let modes = rpurity_core::vibronic::normal_modes(&out.chain)?;
    manifest.derived = serde_json::to_value(Derived {
        homo_lumo_gap: out.chain.homo_lumo_gap(),
        tension: out.chain.tension,
        photon_energy: out.laser.map(|l| l.photon_energy),
        mode_energies: modes
            .frequencies
            .iter()
            .map(|w| w * rpurity_core::vibronic::HBAR)
            .collect(),
        max_energy_drift: out.max_energy_drift,
        outputs: out.series.times.len(),
    })
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    manifest.warnings = out
        .series
        .warnings
        .iter()
        .map(|w| {
            format!(
                "trajectory {}: energy drift {:.3e} eV exceeds tolerance at step {} (t = {} fs)",
                w.trajectory, w.drift, w.step, w.time
            )
        })
        .collect();
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for (name, bytes) in &files {
        write_bytes(&dir.join(name), bytes)?;
        manifest.outputs.push(OutputDoc {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    write_bytes(
        &dir.join(MANIFEST_FILE),
        to_json_string(&manifest)?.as_bytes(),
    )?;
    Ok(out)
}
