//! On-disk formats: JSON for structured objects, CSV for time series.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rpurity_core::densmat::DensityMatrixExpansion;
use rpurity_core::fock::{SlaterDeterminant, Spin, SpinOrbital, SpinOrbitalBasis};
use rpurity_core::purity::{LimitLedger, PurityReport};
use rpurity_core::rdm::ReducedDensityMatrix;
use rpurity_core::reconstruct::{
    CoherenceModel, CoherenceRegime, ObservationSeries, PopulationConstraint, Stage, Verdict,
    RANKING_METHOD,
};
use rpurity_core::{CMatrix, Complex64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// First line of every time-series CSV file.
pub const TIMESERIES_VERSION: &str = "# rpurity-timeseries v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexDoc {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinDoc {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalDoc {
    pub index: usize,
    pub spin: SpinDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDoc {
    pub orbitals: Vec<OrbitalDoc>,
}

impl BasisDoc {
    pub fn from_basis(basis: &SpinOrbitalBasis) -> Self {
        let orbitals = basis
            .orbitals()
            .iter()
            .map(|o| OrbitalDoc {
                index: o.index,
                spin: match o.spin {
                    Spin::Up => SpinDoc::Up,
                    Spin::Down => SpinDoc::Down,
                },
            })
            .collect();
        Self { orbitals }
    }

    pub fn to_basis(&self) -> CliResult<SpinOrbitalBasis> {
        let orbitals = self
            .orbitals
            .iter()
            .map(|o| SpinOrbital {
                index: o.index,
                spin: match o.spin {
                    SpinDoc::Up => Spin::Up,
                    SpinDoc::Down => Spin::Down,
                },
            })
            .collect();
        SpinOrbitalBasis::new(orbitals).map_err(|e| CliError::Input(format!("basis.orbitals: {e}")))
    }
}

/// Short column label of a spin orbital, such as `n_2u`.
pub fn orbital_label(o: &SpinOrbital) -> String {
    let s = match o.spin {
        Spin::Up => 'u',
        Spin::Down => 'd',
    };
    format!("n_{}{s}", o.index)
}

fn matrix_doc(m: &CMatrix) -> Vec<Vec<ComplexDoc>> {
    m.row_iter()
        .map(|row| row.iter().map(|&z| z.into()).collect())
        .collect()
}

/// `{ basis, determinants, coefficients }` with `coefficients[n][m] = a_nm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixDoc {
    pub basis: BasisDoc,
    pub determinants: Vec<String>,
    pub coefficients: Vec<Vec<ComplexDoc>>,
}

impl DensityMatrixDoc {
    pub fn from_expansion(rho: &DensityMatrixExpansion) -> Self {
        Self {
            basis: BasisDoc::from_basis(rho.basis()),
            determinants: rho.dets().iter().map(|d| d.to_string()).collect(),
            coefficients: matrix_doc(rho.coeffs()),
        }
    }

    pub fn to_expansion(&self) -> CliResult<DensityMatrixExpansion> {
        let basis = self.basis.to_basis()?;
        if self.determinants.is_empty() {
            return Err(CliError::Input("determinants: list is empty".into()));
        }
        let dets = self
            .determinants
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let d = SlaterDeterminant::parse(s)
                    .map_err(|e| CliError::Input(format!("determinants[{i}]: {e}")))?;
                if d.n_orbitals() != basis.len() {
                    return Err(CliError::Input(format!(
                        "determinants[{i}]: {} orbitals but the basis has {}",
                        d.n_orbitals(),
                        basis.len()
                    )));
                }
                Ok(d)
            })
            .collect::<CliResult<Vec<_>>>()?;
        let m = dets.len();
        if self.coefficients.len() != m {
            return Err(CliError::Input(format!(
                "coefficients: {} rows for {m} determinants",
                self.coefficients.len()
            )));
        }
        if let Some(i) = self.coefficients.iter().position(|row| row.len() != m) {
            return Err(CliError::Input(format!(
                "coefficients[{i}]: expected {m} entries"
            )));
        }
        let coeffs = CMatrix::from_fn(m, m, |i, j| {
            let z = self.coefficients[i][j];
            Complex64::new(z.re, z.im)
        });
        let rho = DensityMatrixExpansion::new(dets, coeffs)
            .map_err(|e| CliError::Input(format!("coefficients: {e}")))?;
        Ok(rho.with_basis(basis)?)
    }
}

/// Dense reduced density matrix over ascending index tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdmDoc {
    pub order: usize,
    pub n_electrons: usize,
    pub basis: BasisDoc,
    pub tuples: Vec<Vec<usize>>,
    pub matrix: Vec<Vec<ComplexDoc>>,
}

impl RdmDoc {
    pub fn from_rdm(gamma: &ReducedDensityMatrix) -> Self {
        Self {
            order: gamma.order(),
            n_electrons: gamma.n_electrons(),
            basis: BasisDoc::from_basis(gamma.basis()),
            tuples: gamma.tuples(),
            matrix: matrix_doc(gamma.matrix()),
        }
    }
}

/// Writes every entry of the matrix as `row,col,re,im`, tuples space-separated.
pub fn write_rdm_csv<W: Write>(out: W, gamma: &ReducedDensityMatrix) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let tuples = gamma.tuples();
    let label = |t: &[usize]| {
        t.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let err = |e: csv::Error| CliError::Runtime(format!("rdm csv: {e}"));
    w.write_record(["creators", "annihilators", "re", "im"])
        .map_err(err)?;
    for (i, ti) in tuples.iter().enumerate() {
        for (j, tj) in tuples.iter().enumerate() {
            let z = gamma.matrix()[(i, j)];
            w.write_record([label(ti), label(tj), z.re.to_string(), z.im.to_string()])
                .map_err(err)?;
        }
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("rdm csv: {e}")))
}

/// Limit values of one purity order, in decimal or exact form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitsDoc<T> {
    pub r: usize,
    pub n_electrons: usize,
    pub n_dets: usize,
    pub max_value: T,
    pub absolute_min: T,
    pub min_value_given_populations: T,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub second_order_coherent_value: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub second_order_incoherent_value: Option<T>,
    pub higher_order_threshold: T,
    pub fully_incoherent_value: T,
    pub fully_coherent_value: T,
    pub delta1: T,
    pub delta2: T,
}

impl<S> LimitsDoc<S> {
    pub fn from_ledger<T: Copy>(l: &LimitLedger<T>, f: impl Fn(T) -> S) -> Self {
        Self {
            r: l.r,
            n_electrons: l.n_electrons,
            n_dets: l.n_dets,
            max_value: f(l.max_value),
            absolute_min: f(l.absolute_min),
            min_value_given_populations: f(l.min_value_given_populations),
            second_order_coherent_value: l.second_order_coherent_value.map(&f),
            second_order_incoherent_value: l.second_order_incoherent_value.map(&f),
            higher_order_threshold: f(l.higher_order_threshold),
            fully_incoherent_value: f(l.fully_incoherent_value),
            fully_coherent_value: f(l.fully_coherent_value),
            delta1: f(l.delta1),
            delta2: f(l.delta2),
        }
    }
}

/// Oracle comparison attached to a purity report by `--check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckDoc {
    /// Largest difference between the fast RDM and the exhaustive oracle RDM.
    pub rdm_deviation: f64,
    /// Difference between the trace purity and the oracle RDM purity.
    pub purity_deviation: f64,
    /// Whether the closed form applies exactly to this state.
    pub closed_form_exact: bool,
    /// Difference between closed form and trace, when the closed form exists for `r`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closed_form_deviation: Option<f64>,
    /// Largest of the applicable deviations.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityReportDoc {
    pub r: usize,
    pub value: f64,
    pub population_term: f64,
    pub coherence_term: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limits: Option<LimitsDoc<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub check: Option<CheckDoc>,
}

impl PurityReportDoc {
    pub fn from_report(rep: &PurityReport) -> Self {
        Self {
            r: rep.r,
            value: rep.value,
            population_term: rep.population_term,
            coherence_term: rep.coherence_term,
            limits: rep
                .limits
                .as_ref()
                .map(|l| LimitsDoc::from_ledger(l, |x| x)),
            check: None,
        }
    }
}

/// Observation series plus optional bootstrap error bars, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub orbital_labels: Vec<String>,
    pub observation: ObservationSeries,
    pub p1_stderr: Option<Vec<f64>>,
    pub p2_stderr: Option<Vec<f64>>,
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes a time series: a version line, a header, then one row per time.
pub fn write_timeseries<W: Write>(mut out: W, ts: &TimeSeries) -> CliResult<()> {
    let err = |e: std::io::Error| CliError::Runtime(format!("time series: {e}"));
    writeln!(out, "{TIMESERIES_VERSION}").map_err(err)?;
    let mut w = csv::Writer::from_writer(out);
    let cerr = |e: csv::Error| CliError::Runtime(format!("time series: {e}"));
    let mut header = vec!["t_fs".to_string()];
    header.extend(ts.orbital_labels.iter().cloned());
    header.extend(["P1", "P2", "P1_stderr", "P2_stderr"].map(String::from));
    w.write_record(&header).map_err(cerr)?;
    let obs = &ts.observation;
    for t in 0..obs.len() {
        let mut row = vec![obs.times[t].to_string()];
        row.extend(obs.orbital_populations[t].iter().map(|x| x.to_string()));
        row.push(obs.p1[t].to_string());
        row.push(cell(obs.p2.as_ref().map(|p| p[t])));
        row.push(cell(ts.p1_stderr.as_ref().map(|p| p[t])));
        row.push(cell(ts.p2_stderr.as_ref().map(|p| p[t])));
        w.write_record(&row).map_err(cerr)?;
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("time series: {e}")))
}

fn optional_column(values: Vec<Option<f64>>, name: &str) -> CliResult<Option<Vec<f64>>> {
    if values.iter().all(Option::is_none) {
        return Ok(None);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::Input(format!("{name}: missing value in row {i}"))))
        .collect::<CliResult<Vec<_>>>()
        .map(Some)
}

/// Parses a time series written by [`write_timeseries`].
pub fn read_timeseries(text: &str) -> CliResult<TimeSeries> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r');
    if first != TIMESERIES_VERSION {
        return Err(CliError::Input(format!(
            "time series: first line must be `{TIMESERIES_VERSION}`, found `{first}`"
        )));
    }
    let body = lines.next().unwrap_or("");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("time series header: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let tail = ["P1", "P2", "P1_stderr", "P2_stderr"];
    if header.len() < 6 || header[0] != "t_fs" || header[header.len() - 4..] != tail {
        return Err(CliError::Input(format!(
            "time series header must read t_fs,<orbitals>,P1,P2,P1_stderr,P2_stderr; found {}",
            header.join(",")
        )));
    }
    let k = header.len() - 5;
    let orbital_labels = header[1..1 + k].to_vec();
    let (mut times, mut pops, mut p1) = (Vec::new(), Vec::new(), Vec::new());
    let (mut p2, mut s1, mut s2) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("time series row {i}: {e}")))?;
        let parse = |c: usize| -> CliResult<Option<f64>> {
            let s = rec.get(c).unwrap_or("").trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| {
                CliError::Input(format!("time series row {i}, column {}: {e}", header[c]))
            })
        };
        let req = |c: usize| -> CliResult<f64> {
            parse(c)?.ok_or_else(|| {
                CliError::Input(format!(
                    "time series row {i}: column {} is empty",
                    header[c]
                ))
            })
        };
        times.push(req(0)?);
        pops.push((1..=k).map(req).collect::<CliResult<Vec<_>>>()?);
        p1.push(req(k + 1)?);
        p2.push(parse(k + 2)?);
        s1.push(parse(k + 3)?);
        s2.push(parse(k + 4)?);
    }
    let p2 = optional_column(p2, "P2")?;
    let observation = ObservationSeries::new(times, pops, p1, p2)
        .map_err(|e| CliError::Input(format!("time series: {e}")))?;
    Ok(TimeSeries {
        orbital_labels,
        observation,
        p1_stderr: optional_column(s1, "P1_stderr")?,
        p2_stderr: optional_column(s2, "P2_stderr")?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeDoc {
    Zero,
    Full,
    Free,
}

impl From<RegimeDoc> for CoherenceRegime {
    fn from(r: RegimeDoc) -> Self {
        match r {
            RegimeDoc::Zero => CoherenceRegime::Zero,
            RegimeDoc::Full => CoherenceRegime::Full,
            RegimeDoc::Free => CoherenceRegime::Free,
        }
    }
}

impl From<CoherenceRegime> for RegimeDoc {
    fn from(r: CoherenceRegime) -> Self {
        match r {
            CoherenceRegime::Zero => RegimeDoc::Zero,
            CoherenceRegime::Full => RegimeDoc::Full,
            CoherenceRegime::Free => RegimeDoc::Free,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintDoc {
    Zero(usize),
    Equal([usize; 2]),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDoc {
    pub pair: [usize; 2],
    pub regime: RegimeDoc,
}

fn default_regime() -> RegimeDoc {
    RegimeDoc::Free
}

/// Coherence model: determinants, population constraints and the coherence
/// regime of each pair. Pairs not listed take `default_regime`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub name: String,
    pub determinants: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
    #[serde(default = "default_regime")]
    pub default_regime: RegimeDoc,
    #[serde(default)]
    pub couplings: Vec<CouplingDoc>,
}

impl ModelDoc {
    pub fn from_model(model: &CoherenceModel) -> Self {
        let m = model.dets().len();
        let mut couplings = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let r = model.regime(i, j);
                if r != CoherenceRegime::Free {
                    couplings.push(CouplingDoc {
                        pair: [i, j],
                        regime: r.into(),
                    });
                }
            }
        }
        Self {
            name: model.name().to_string(),
            determinants: model.dets().iter().map(|d| d.to_string()).collect(),
            constraints: model
                .population_constraints()
                .iter()
                .map(|c| match *c {
                    PopulationConstraint::Zero(i) => ConstraintDoc::Zero(i),
                    PopulationConstraint::Equal(i, j) => ConstraintDoc::Equal([i, j]),
                })
                .collect(),
            default_regime: RegimeDoc::Free,
            couplings,
        }
    }

    pub fn to_model(&self) -> CliResult<CoherenceModel> {
        let ctx = |msg: String| CliError::Input(format!("model {}: {msg}", self.name));
        let dets = self
            .determinants
            .iter()
            .enumerate()
            .map(|(i, s)| {
                SlaterDeterminant::parse(s).map_err(|e| ctx(format!("determinants[{i}]: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let m = dets.len();
        let mut regimes = DMatrix::from_element(m, m, CoherenceRegime::from(self.default_regime));
        for (k, c) in self.couplings.iter().enumerate() {
            let [i, j] = c.pair;
            if i >= m || j >= m || i == j {
                return Err(ctx(format!("couplings[{k}]: invalid pair [{i}, {j}]")));
            }
            regimes[(i, j)] = c.regime.into();
            regimes[(j, i)] = c.regime.into();
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| match *c {
                ConstraintDoc::Zero(i) => PopulationConstraint::Zero(i),
                ConstraintDoc::Equal([i, j]) => PopulationConstraint::Equal(i, j),
            })
            .collect();
        CoherenceModel::new(self.name.clone(), dets, constraints, |i, j| regimes[(i, j)])
            .map_err(|e| ctx(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub stage: String,
    pub time: f64,
    pub observed: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelVerdictDoc {
    pub name: String,
    pub status: String,
    pub first_violation: Option<ViolationDoc>,
    pub rank: Option<usize>,
    pub population_residual: f64,
    pub populations_consistent: bool,
    pub unique_fit: bool,
    pub p1_residual: f64,
    pub p2_residual: Option<f64>,
    pub envelope_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub survivors: Vec<String>,
    pub two_body_stage: bool,
    pub ranking_method: String,
    pub tolerance: f64,
    pub diagnostic: Option<String>,
    pub models: Vec<ModelVerdictDoc>,
}

pub fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::OneBody => "one_body",
        Stage::InitialOneBody => "initial_one_body",
        Stage::TwoBody => "two_body",
        Stage::InitialTwoBody => "initial_two_body",
    }
}

impl VerdictDoc {
    pub fn from_verdict(v: &Verdict, tolerance: f64) -> Self {
        Self {
            survivors: v.survivors.clone(),
            two_body_stage: v.two_body_stage,
            ranking_method: RANKING_METHOD.to_string(),
            tolerance,
            diagnostic: v.diagnostic.clone(),
            models: v
                .models
                .iter()
                .map(|m| ModelVerdictDoc {
                    name: m.name.clone(),
                    status: if m.survived { "survived" } else { "discarded" }.to_string(),
                    first_violation: m.violation.as_ref().map(|x| ViolationDoc {
                        stage: stage_name(x.stage).to_string(),
                        time: x.time,
                        observed: x.observed,
                        lower: x.lower,
                        upper: x.upper,
                    }),
                    rank: m.rank,
                    population_residual: m.population_residual,
                    populations_consistent: m.populations_consistent,
                    unique_fit: m.unique_fit,
                    p1_residual: m.p1_residual,
                    p2_residual: m.p2_residual,
                    envelope_width: m.envelope_width,
                })
                .collect(),
        }
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDoc {
    pub file: String,
    pub sha256: String,
}

/// Run record: tool version, full configuration echo and output hashes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the compact JSON form of `config`.
    pub config_hash: String,
    pub config: serde_json::Value,
    #[serde(default)]
    pub derived: serde_json::Value,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<OutputDoc>,
}

impl ManifestDoc {
    pub fn new<C: Serialize>(command: &str, config: &C) -> CliResult<Self> {
        let config = serde_json::to_value(config)
            .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        let compact = serde_json::to_string(&config)
            .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: sha256_hex(compact.as_bytes()),
            config,
            derived: serde_json::Value::Null,
            warnings: Vec::new(),
            outputs: Vec::new(),
        })
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

/// Reads and deserializes a JSON file; schema errors become input errors naming the file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn to_json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::write(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::write(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_bytes(path, to_json_string(value)?.as_bytes())
}

pub fn read_density(path: &Path) -> CliResult<DensityMatrixExpansion> {
    let doc: DensityMatrixDoc = read_json(path)?;
    doc.to_expansion()
        .map_err(|e| e.context(&path.display().to_string()))
}
