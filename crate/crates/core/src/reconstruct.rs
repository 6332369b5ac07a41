//! Inferring coherences from orbital populations and reduced purities.
//!
//! A [`CoherenceModel`] names a set of determinants, linear constraints on
//! their populations and, for each pair, whether the coherence is absent,
//! maximal or unknown. Given observed orbital populations, the determinant
//! populations of a model follow from a constrained least-squares fit. The
//! closed-form purities with every unknown coherence switched off or fully on
//! then bound what the model can produce, and models whose bounds miss the
//! observed purity are discarded.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::fock::{coherence_order, SlaterDeterminant};
use crate::purity::closed_form_terms;
use crate::{Error, Result};

/// Residual above which a population fit is rejected.
pub const FIT_THRESHOLD: f64 = 1e-6;
/// Envelope tolerance for noiseless data.
pub const NOISELESS_TOL: f64 = 1e-6;
/// Envelope tolerance for trajectory-ensemble data.
pub const ENSEMBLE_TOL: f64 = 0.02;

const NEG_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoherenceRegime {
    /// `a_nm = 0`.
    Zero,
    /// `|a_nm|² = a_nn a_mm`.
    Full,
    /// Anything allowed by positivity.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PopulationConstraint {
    /// `a_nn = 0`.
    Zero(usize),
    /// `a_nn = a_mm`.
    Equal(usize, usize),
}

/// Candidate description of the N-body state.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceModel {
    name: String,
    dets: Vec<SlaterDeterminant>,
    population_constraints: Vec<PopulationConstraint>,
    regimes: DMatrix<CoherenceRegime>,
    orders: DMatrix<usize>,
}

impl CoherenceModel {
    /// Builds a model, assigning `regime(n, m)` to each pair `n < m`.
    ///
    /// Fails when the determinants are inconsistent or when no density matrix
    /// satisfies the constraints.
    pub fn new(
        name: impl Into<String>,
        dets: Vec<SlaterDeterminant>,
        population_constraints: Vec<PopulationConstraint>,
        regime: impl Fn(usize, usize) -> CoherenceRegime,
    ) -> Result<Self> {
        let m = dets.len();
        if m == 0 {
            return Err(Error::InvalidParameter("model has no determinants".into()));
        }
        if dets.iter().enumerate().any(|(i, d)| dets[..i].contains(d)) {
            return Err(Error::InvalidParameter(
                "model repeats a determinant".into(),
            ));
        }
        let mut orders = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                orders[(i, j)] = coherence_order(&dets[i], &dets[j])?;
            }
        }
        for c in &population_constraints {
            let (a, b) = match *c {
                PopulationConstraint::Zero(a) => (a, a),
                PopulationConstraint::Equal(a, b) => (a, b),
            };
            if a >= m || b >= m {
                return Err(Error::InvalidParameter(format!(
                    "population constraint {c:?} refers past {m} determinants"
                )));
            }
        }
        let regimes = DMatrix::from_fn(m, m, |i, j| match i.cmp(&j) {
            core::cmp::Ordering::Equal => CoherenceRegime::Full,
            core::cmp::Ordering::Less => regime(i, j),
            core::cmp::Ordering::Greater => regime(j, i),
        });
        let model = Self {
            name: name.into(),
            dets,
            population_constraints,
            regimes,
            orders,
        };
        if model.witness().is_none() {
            return Err(Error::InvalidParameter(format!(
                "constraints of model {} admit no density matrix",
                model.name
            )));
        }
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dets(&self) -> &[SlaterDeterminant] {
        &self.dets
    }

    pub fn population_constraints(&self) -> &[PopulationConstraint] {
        &self.population_constraints
    }

    pub fn regime(&self, n: usize, m: usize) -> CoherenceRegime {
        self.regimes[(n, m)]
    }

    pub fn n_electrons(&self) -> usize {
        self.dets[0].n_electrons()
    }

    /// Population groups tied by equality constraints, excluding groups
    /// forced to zero. Each group lists its determinant indices in order.
    fn groups(&self) -> Vec<Vec<usize>> {
        let m = self.dets.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut zero = vec![false; m];
        for c in &self.population_constraints {
            match *c {
                PopulationConstraint::Zero(a) => zero[a] = true,
                PopulationConstraint::Equal(a, b) => {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..m {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups
            .into_values()
            .filter(|g| !g.iter().any(|&i| zero[i]))
            .collect()
    }

    /// A coefficient matrix (real, block diagonal) obeying every constraint.
    ///
    /// Determinants linked by fully coherent pairs must form a rank-one
    /// block, so a zero-coherence pair inside such a block can only be met by
    /// emptying some populations. Subsets of population groups are tried from
    /// largest to smallest.
    pub fn witness(&self) -> Option<DMatrix<f64>> {
        let groups = self.groups();
        let g = groups.len();
        if g == 0 || g > 20 {
            return None;
        }
        let m = self.dets.len();
        for size in (1..=g).rev() {
            for chosen in (0..g).combinations(size) {
                let active: Vec<usize> = chosen
                    .iter()
                    .flat_map(|&k| groups[k].iter().copied())
                    .collect();
                let mut label: Vec<usize> = (0..m).collect();
                // Connected components of the fully coherent graph on active determinants.
                loop {
                    let mut changed = false;
                    for &i in &active {
                        for &j in &active {
                            if self.regimes[(i, j)] == CoherenceRegime::Full && label[i] != label[j]
                            {
                                let l = label[i].min(label[j]);
                                label[i] = l;
                                label[j] = l;
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                let clash = active.iter().any(|&i| {
                    active.iter().any(|&j| {
                        label[i] == label[j] && self.regimes[(i, j)] == CoherenceRegime::Zero
                    })
                });
                if clash {
                    continue;
                }
                let w = 1.0 / active.len() as f64;
                let mut a = DMatrix::zeros(m, m);
                for &i in &active {
                    for &j in &active {
                        if label[i] == label[j] {
                            a[(i, j)] = w;
                        }
                    }
                }
                return Some(a);
            }
        }
        None
    }
}

/// Observed orbital populations and purities over time.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub orbital_populations: Vec<Vec<f64>>,
    pub p1: Vec<f64>,
    pub p2: Option<Vec<f64>>,
}

impl ObservationSeries {
    /// Validates lengths, population bounds and a constant integer electron count.
    pub fn new(
        times: Vec<f64>,
        orbital_populations: Vec<Vec<f64>>,
        p1: Vec<f64>,
        p2: Option<Vec<f64>>,
    ) -> Result<Self> {
        let t = times.len();
        if t == 0 {
            return Err(Error::InvalidParameter(
                "observation series is empty".into(),
            ));
        }
        if orbital_populations.len() != t
            || p1.len() != t
            || p2.as_ref().is_some_and(|p| p.len() != t)
        {
            return Err(Error::InvalidParameter(
                "observation columns differ in length".into(),
            ));
        }
        let k = orbital_populations[0].len();
        let n = orbital_populations[0].iter().sum::<f64>().round();
        for (step, pops) in orbital_populations.iter().enumerate() {
            if pops.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "row {step} has {} orbitals, expected {k}",
                    pops.len()
                )));
            }
            if let Some(p) = pops.iter().find(|&&p| !(-1e-6..=1.0 + 1e-6).contains(&p)) {
                return Err(Error::InvalidParameter(format!(
                    "row {step} has orbital population {p}"
                )));
            }
            let sum: f64 = pops.iter().sum();
            if (sum - n).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "row {step} holds {sum} electrons, expected {n}"
                )));
            }
        }
        Ok(Self {
            times,
            orbital_populations,
            p1,
            p2,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbital_populations[0].len()
    }
}

/// Outcome of the population fit of one model at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationFit {
    /// One optimal set of determinant populations.
    pub populations: Vec<f64>,
    /// Euclidean norm of the orbital-population misfit.
    pub residual: f64,
    /// Whether the optimal populations are unique.
    pub unique: bool,
    /// Vertices of the set of optimal populations; a single entry when unique.
    pub vertices: Vec<Vec<f64>>,
    /// Directions spanning the affine hull of the optimal set. Every optimum
    /// is `populations + Σ_k z_k directions[k]` with nonnegative entries.
    pub directions: Vec<Vec<f64>>,
}

/// Symmetric eigen-decomposition based pseudo-inverse solve of `min |A x - b|`
/// returning the minimum-norm solution and a basis of the nullspace of `A`.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, Vec<DVector<f64>>) {
    let n = a.ncols();
    if n == 0 {
        return (DVector::zeros(0), Vec::new());
    }
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    let rhs = a.transpose() * b;
    let mut x = DVector::zeros(n);
    let mut null = Vec::new();
    for k in 0..n {
        let v = eig.eigenvectors.column(k).into_owned();
        let lam = eig.eigenvalues[k];
        if lam > 1e-10 * scale {
            x += &v * (v.dot(&rhs) / lam);
        } else {
            null.push(v);
        }
    }
    (x, null)
}

/// Orthonormal basis of the complement of `c`.
fn complement(c: &DVector<f64>) -> DMatrix<f64> {
    let n = c.len();
    let u = c / c.norm();
    let proj = DMatrix::identity(n, n) - &u * u.transpose();
    let eig = proj.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimizes `|A x - y|` subject to `c·x = 1`, returning the minimum-norm
/// solution and the nullspace directions of `[A; c]`.
fn equality_lstsq(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, Vec<DVector<f64>>) {
    let xp = c / c.norm_squared();
    let z = complement(c);
    let (w, null) = lstsq(&(a * &z), &(y - a * &xp));
    (xp + &z * w, null.into_iter().map(|v| &z * v).collect())
}

/// Vertices of `{x0 + N z ≥ 0}` for the directions in `dirs`.
fn vertices(x0: &DVector<f64>, dirs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let d = dirs.len();
    if d == 0 {
        return if x0.iter().all(|&v| v >= -NEG_TOL) {
            vec![x0.clone()]
        } else {
            Vec::new()
        };
    }
    let nmat = DMatrix::from_columns(dirs);
    let mut out: Vec<DVector<f64>> = Vec::new();
    for rows in (0..x0.len()).combinations(d) {
        let sub = DMatrix::from_fn(d, d, |i, j| nmat[(rows[i], j)]);
        let rhs = DVector::from_iterator(d, rows.iter().map(|&r| -x0[r]));
        let Some(z) = sub.lu().solve(&rhs) else {
            continue;
        };
        let x = x0 + &nmat * z;
        if x.iter().all(|&v| v >= -NEG_TOL) && !out.iter().any(|o| (o - &x).amax() < 1e-9) {
            out.push(x);
        }
    }
    out
}

/// Unconstrained-by-threshold least-squares fit of model populations to one
/// row of orbital populations.
pub fn least_squares_populations(
    model: &CoherenceModel,
    orbital_populations: &[f64],
) -> Result<PopulationFit> {
    let k = model.dets[0].n_orbitals();
    if orbital_populations.len() != k {
        return Err(Error::Incompatible(format!(
            "{} orbital populations for determinants over {k} orbitals",
            orbital_populations.len()
        )));
    }
    let groups = model.groups();
    let g = groups.len();
    let m = model.dets.len();
    let a = DMatrix::from_fn(k, g, |e, j| {
        groups[j]
            .iter()
            .filter(|&&n| model.dets[n].is_occupied(e))
            .count() as f64
    });
    let c = DVector::from_iterator(g, groups.iter().map(|grp| grp.len() as f64));
    let y = DVector::from_column_slice(orbital_populations);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for support in (1..=g).flat_map(|s| (0..g).combinations(s)) {
        let a_s = DMatrix::from_fn(k, support.len(), |e, j| a[(e, support[j])]);
        let c_s = DVector::from_iterator(support.len(), support.iter().map(|&j| c[j]));
        let (x_s, dirs) = equality_lstsq(&a_s, &c_s, &y);
        let Some(x_s) = vertices(&x_s, &dirs).into_iter().next() else {
            continue;
        };
        let mut x = DVector::zeros(g);
        for (j, &col) in support.iter().enumerate() {
            x[col] = x_s[j].max(0.0);
        }
        let res = (&a * &x - &y).norm();
        if best.as_ref().is_none_or(|(r, _)| res < *r - 1e-14) {
            best = Some((res, x));
        }
    }
    let (residual, x) =
        best.ok_or_else(|| Error::InvalidParameter("model has no free populations".into()))?;

    // The optimal set is the polytope {x ≥ 0 : A x = A x*, c·x = 1}.
    let mut stacked = DMatrix::zeros(k + 1, g);
    stacked.view_mut((0, 0), (k, g)).copy_from(&a);
    stacked.row_mut(k).copy_from(&c.transpose());
    let (_, null) = lstsq(&stacked, &DVector::zeros(k + 1));
    let verts = vertices(&x, &null);
    let expand = |v: &DVector<f64>| -> Vec<f64> {
        let mut pops = vec![0.0; m];
        for (j, grp) in groups.iter().enumerate() {
            for &n in grp {
                pops[n] = v[j].max(0.0);
            }
        }
        pops
    };
    let expand_dir = |v: &DVector<f64>| -> Vec<f64> {
        let mut d = vec![0.0; m];
        for (j, grp) in groups.iter().enumerate() {
            for &n in grp {
                d[n] = v[j];
            }
        }
        d
    };
    Ok(PopulationFit {
        populations: expand(&x),
        residual,
        unique: verts.len() <= 1,
        vertices: if verts.is_empty() {
            vec![expand(&x)]
        } else {
            verts.iter().map(expand).collect()
        },
        directions: null.iter().map(expand_dir).collect(),
    })
}

/// Fits the model's determinant populations to the observed orbital
/// populations at time index `t`; `None` when the misfit exceeds
/// [`FIT_THRESHOLD`].
pub fn fit_populations(
    model: &CoherenceModel,
    obs: &ObservationSeries,
    t: usize,
) -> Result<Option<PopulationFit>> {
    let row = obs
        .orbital_populations
        .get(t)
        .ok_or_else(|| Error::InvalidParameter(format!("time index {t} out of range")))?;
    let fit = least_squares_populations(model, row)?;
    Ok((fit.residual <= FIT_THRESHOLD).then_some(fit))
}

/// Result of a candidate search over an active determinant space.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSearch {
    pub models: Vec<CoherenceModel>,
    /// Subsets skipped because they exceed the size cap.
    pub pruned: usize,
    pub diagnostic: Option<String>,
}

/// Lists every subset of the active space, up to `max_size` determinants,
/// whose occupation patterns reproduce the orbital populations with
/// nonnegative weights. Each candidate leaves all coherences free.
pub fn enumerate_candidates(
    active_space: &[SlaterDeterminant],
    orbital_populations: &[f64],
    max_size: usize,
) -> Result<CandidateSearch> {
    if active_space.is_empty() {
        return Err(Error::InvalidParameter("active space is empty".into()));
    }
    let m = active_space.len();
    let mut models = Vec::new();
    let mut pruned = 0usize;
    for size in 1..=m {
        if size > max_size {
            pruned += crate::binomial(m, size);
            continue;
        }
        for subset in (0..m).combinations(size) {
            let dets: Vec<SlaterDeterminant> =
                subset.iter().map(|&i| active_space[i].clone()).collect();
            let name = format!("{{{}}}", subset.iter().join(","));
            let model = CoherenceModel::new(name, dets, Vec::new(), |_, _| CoherenceRegime::Free)?;
            if least_squares_populations(&model, orbital_populations)?.residual <= FIT_THRESHOLD {
                models.push(model);
            }
        }
    }
    let mut diagnostic = None;
    if pruned > 0 {
        diagnostic = Some(format!(
            "{pruned} subsets larger than {max_size} determinants were not examined"
        ));
    }
    if models.is_empty() {
        diagnostic =
            Some(format!(
            "no subset of the {m}-determinant active space reproduces the orbital populations{}",
            if pruned > 0 { " within the size cap" } else { "" }
        ));
    }
    Ok(CandidateSearch {
        models,
        pruned,
        diagnostic,
    })
}

/// Incoherent and coherent limits of `P1` and `P2` for a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub p1_inc: f64,
    pub p1_coh: f64,
    pub p2_inc: f64,
    pub p2_coh: f64,
}

impl Envelope {
    fn bounds(&self, r: usize) -> (f64, f64) {
        if r == 1 {
            (self.p1_inc, self.p1_coh)
        } else {
            (self.p2_inc, self.p2_coh)
        }
    }
}

/// Closed-form purities with free coherences off (incoherent limit) and on
/// (coherent limit). Zero and fully coherent pairs keep their fixed values.
pub fn purity_envelope(model: &CoherenceModel, populations: &[f64]) -> Result<Envelope> {
    let m = model.dets.len();
    if populations.len() != m {
        return Err(Error::Incompatible(format!(
            "{} populations for {m} determinants",
            populations.len()
        )));
    }
    let n = model.n_electrons();
    let inc = |i: usize, j: usize| match model.regimes[(i, j)] {
        CoherenceRegime::Full => populations[i] * populations[j],
        _ => 0.0,
    };
    let coh = |i: usize, j: usize| match model.regimes[(i, j)] {
        CoherenceRegime::Zero => 0.0,
        _ => populations[i] * populations[j],
    };
    let sum = |(a, b): (f64, f64)| a + b;
    Ok(Envelope {
        p1_inc: sum(closed_form_terms(1, n, populations, &model.orders, inc)?),
        p1_coh: sum(closed_form_terms(1, n, populations, &model.orders, coh)?),
        p2_inc: sum(closed_form_terms(2, n, populations, &model.orders, inc)?),
        p2_coh: sum(closed_form_terms(2, n, populations, &model.orders, coh)?),
    })
}

/// Envelope over every optimal population set of a fit: vertices, their
/// centroid and pairwise midpoints are evaluated and the extremes kept.
fn fit_envelope(model: &CoherenceModel, fit: &PopulationFit) -> Result<Envelope> {
    let mut points: Vec<Vec<f64>> = fit.vertices.clone();
    if fit.vertices.len() > 1 {
        let m = fit.populations.len();
        let k = fit.vertices.len() as f64;
        points.push(
            (0..m)
                .map(|i| fit.vertices.iter().map(|v| v[i]).sum::<f64>() / k)
                .collect(),
        );
        for (a, b) in fit.vertices.iter().tuple_combinations() {
            points.push(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect());
        }
    }
    let mut env = purity_envelope(model, &points[0])?;
    for p in &points[1..] {
        let e = purity_envelope(model, p)?;
        env.p1_inc = env.p1_inc.min(e.p1_inc);
        env.p2_inc = env.p2_inc.min(e.p2_inc);
        env.p1_coh = env.p1_coh.max(e.p1_coh);
        env.p2_coh = env.p2_coh.max(e.p2_coh);
    }
    Ok(env)
}

/// Purities the initial state is known to have.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialPurities {
    pub p1: f64,
    pub p2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscardOptions {
    /// Allowed excursion of the observation outside an envelope.
    pub tol: f64,
    /// Only every `stride`-th time step is tested.
    pub stride: usize,
    /// Known initial purities each model must reproduce.
    pub initial: Option<InitialPurities>,
}

impl Default for DiscardOptions {
    fn default() -> Self {
        Self {
            tol: NOISELESS_TOL,
            stride: 1,
            initial: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Observed `P1` outside the one-body envelope.
    OneBody,
    /// Known initial `P1` outside the envelope at the first time.
    InitialOneBody,
    /// Observed `P2` outside the two-body envelope.
    TwoBody,
    /// Known initial `P2` outside the envelope at the first time.
    InitialTwoBody,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub stage: Stage,
    pub time: f64,
    pub observed: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelVerdict {
    pub name: String,
    pub survived: bool,
    pub violation: Option<Violation>,
    /// Position in the ranking of survivors, starting at zero.
    pub rank: Option<usize>,
    /// Largest orbital-population misfit over the tested times.
    pub population_residual: f64,
    /// Whether the misfit stays below [`FIT_THRESHOLD`] at every tested time.
    pub populations_consistent: bool,
    /// Whether every tested fit was unique.
    pub unique_fit: bool,
    /// Time-integrated distance of `P1` from the envelope.
    pub p1_residual: f64,
    /// Same for `P2`, when the two-body stage ran.
    pub p2_residual: Option<f64>,
    /// Time-integrated envelope width, summed over the stages that ran.
    pub envelope_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub models: Vec<ModelVerdict>,
    /// Names of surviving models, best first.
    pub survivors: Vec<String>,
    /// Whether the two-body stage was needed.
    pub two_body_stage: bool,
    pub diagnostic: Option<String>,
}

/// Ranking rule applied to surviving models.
pub const RANKING_METHOD: &str =
    "integrated distance of the observed purities from each envelope, ties broken by integrated envelope width";

fn outside(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

fn integrate(times: &[f64], values: &[f64]) -> f64 {
    if times.len() == 1 {
        return values[0];
    }
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

struct Stagewise<'a> {
    obs: &'a ObservationSeries,
    steps: Vec<usize>,
    opts: &'a DiscardOptions,
}

impl Stagewise<'_> {
    fn test(&self, env: &[Envelope], r: usize) -> (Option<Violation>, f64, f64) {
        let observed: &[f64] = if r == 1 {
            &self.obs.p1
        } else {
            self.obs.p2.as_deref().expect("checked")
        };
        let (stage, initial_stage, known) = if r == 1 {
            (
                Stage::OneBody,
                Stage::InitialOneBody,
                self.opts.initial.map(|i| i.p1),
            )
        } else {
            (
                Stage::TwoBody,
                Stage::InitialTwoBody,
                self.opts.initial.and_then(|i| i.p2),
            )
        };
        let mut violation = None;
        for (e, &t) in env.iter().zip(&self.steps) {
            let (lo, hi) = e.bounds(r);
            let x = observed[t];
            if outside(x, lo, hi) > self.opts.tol {
                violation = Some(Violation {
                    stage,
                    time: self.obs.times[t],
                    observed: x,
                    lower: lo,
                    upper: hi,
                });
                break;
            }
        }
        if violation.is_none() {
            if let Some(x) = known {
                let (lo, hi) = env[0].bounds(r);
                if outside(x, lo, hi) > self.opts.tol {
                    violation = Some(Violation {
                        stage: initial_stage,
                        time: self.obs.times[self.steps[0]],
                        observed: x,
                        lower: lo,
                        upper: hi,
                    });
                }
            }
        }
        let times: Vec<f64> = self.steps.iter().map(|&t| self.obs.times[t]).collect();
        let dist: Vec<f64> = env
            .iter()
            .zip(&self.steps)
            .map(|(e, &t)| {
                let (lo, hi) = e.bounds(r);
                outside(observed[t], lo, hi)
            })
            .collect();
        let width: Vec<f64> = env
            .iter()
            .map(|e| {
                let (lo, hi) = e.bounds(r);
                hi - lo
            })
            .collect();
        (
            violation,
            integrate(&times, &dist),
            integrate(&times, &width),
        )
    }
}

/// Runs the elimination: one-body envelope test, optional initial-value
/// test, then the two-body tests when more than one model survives and the
/// series carries `P2`. Survivors are ranked by [`RANKING_METHOD`].
///
/// Populations are fitted by least squares at every tested time. A model
/// whose populations cannot reproduce the orbital data still receives an
/// envelope from its best fit; the misfit is reported in
/// [`ModelVerdict::population_residual`].
pub fn discard(
    models: &[CoherenceModel],
    obs: &ObservationSeries,
    opts: &DiscardOptions,
) -> Result<Verdict> {
    if opts.stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    let mut steps: Vec<usize> = (0..obs.len()).step_by(opts.stride).collect();
    if steps.last() != Some(&(obs.len() - 1)) {
        steps.push(obs.len() - 1);
    }
    let mut envelopes = Vec::with_capacity(models.len());
    let mut verdicts = Vec::with_capacity(models.len());
    for model in models {
        let mut env = Vec::with_capacity(steps.len());
        let (mut worst, mut unique) = (0.0f64, true);
        for &t in &steps {
            let fit = least_squares_populations(model, &obs.orbital_populations[t])?;
            worst = worst.max(fit.residual);
            unique &= fit.unique;
            env.push(fit_envelope(model, &fit)?);
        }
        envelopes.push(env);
        verdicts.push(ModelVerdict {
            name: model.name.clone(),
            survived: true,
            violation: None,
            rank: None,
            population_residual: worst,
            populations_consistent: worst <= FIT_THRESHOLD,
            unique_fit: unique,
            p1_residual: 0.0,
            p2_residual: None,
            envelope_width: 0.0,
        });
    }
    let stages = Stagewise { obs, steps, opts };
    for (v, env) in verdicts.iter_mut().zip(&envelopes) {
        let (violation, residual, width) = stages.test(env, 1);
        v.p1_residual = residual;
        v.envelope_width = width;
        if violation.is_some() {
            v.survived = false;
            v.violation = violation;
        }
    }
    let survivors_after_one = verdicts.iter().filter(|v| v.survived).count();
    let two_body_stage = survivors_after_one > 1 && obs.p2.is_some();
    if two_body_stage {
        for (v, env) in verdicts.iter_mut().zip(&envelopes) {
            if !v.survived {
                continue;
            }
            let (violation, residual, width) = stages.test(env, 2);
            v.p2_residual = Some(residual);
            v.envelope_width += width;
            if violation.is_some() {
                v.survived = false;
                v.violation = violation;
            }
        }
    }
    let mut order: Vec<usize> = (0..verdicts.len())
        .filter(|&i| verdicts[i].survived)
        .collect();
    order.sort_by(|&a, &b| {
        let key = |v: &ModelVerdict| v.p1_residual + v.p2_residual.unwrap_or(0.0);
        key(&verdicts[a])
            .total_cmp(&key(&verdicts[b]))
            .then(
                verdicts[a]
                    .envelope_width
                    .total_cmp(&verdicts[b].envelope_width),
            )
            .then(a.cmp(&b))
    });
    for (rank, &i) in order.iter().enumerate() {
        verdicts[i].rank = Some(rank);
    }
    let survivors: Vec<String> = order.iter().map(|&i| verdicts[i].name.clone()).collect();
    let diagnostic = survivors.is_empty().then(|| {
        verdicts
            .iter()
            .map(|v| {
                let x = v
                    .violation
                    .as_ref()
                    .expect("discarded models carry a violation");
                format!("{}: {:?} at t = {}", v.name, x.stage, x.time)
            })
            .join("; ")
    });
    Ok(Verdict {
        models: verdicts,
        survivors,
        two_body_stage,
        diagnostic,
    })
}

/// The five candidate states for photoexcitation of a half-filled chain with
/// `n_spatial` orbitals per spin.
///
/// The determinants are the closed-shell ground state `Φ0`, the spin-up
/// HOMO→LUMO excitation `Φ1` and the spin-down one `Φ2`:
///
/// * `M1`: coherent `Φ0`, `Φ1`, `Φ2` with `a_22 = 0`
/// * `M2`: all three coherent, `a_11 = a_22`
/// * `M3`: incoherent `Φ0`, `Φ1` with `a_22 = 0`
/// * `M4`: only the `Φ1`/`Φ2` coherence, `a_11 = a_22`
/// * `M5`: fully incoherent, `a_11 = a_22`
pub fn photoexcitation_models(n_spatial: usize) -> Result<Vec<CoherenceModel>> {
    if n_spatial < 2 || n_spatial % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "half filling needs an even orbital count, got {n_spatial}"
        )));
    }
    let k = 2 * n_spatial;
    let homo = n_spatial / 2 - 1;
    let lumo = homo + 1;
    let closed: Vec<usize> = (0..=homo)
        .chain((0..=homo).map(|i| i + n_spatial))
        .collect();
    let excite = |from: usize, to: usize| -> Result<SlaterDeterminant> {
        let occ: Vec<usize> = closed
            .iter()
            .map(|&i| if i == from { to } else { i })
            .collect();
        SlaterDeterminant::from_occupied(k, &occ)
    };
    let dets = vec![
        SlaterDeterminant::from_occupied(k, &closed)?,
        excite(homo, lumo)?,
        excite(homo + n_spatial, lumo + n_spatial)?,
    ];
    use CoherenceRegime::{Full, Zero};
    use PopulationConstraint::{Equal, Zero as Empty};
    Ok(vec![
        CoherenceModel::new("M1", dets.clone(), vec![Empty(2)], |_, _| Full)?,
        CoherenceModel::new("M2", dets.clone(), vec![Equal(1, 2)], |_, _| Full)?,
        CoherenceModel::new("M3", dets.clone(), vec![Empty(2)], |_, _| Zero)?,
        CoherenceModel::new("M4", dets.clone(), vec![Equal(1, 2)], |i, j| {
            if (i, j) == (1, 2) {
                Full
            } else {
                Zero
            }
        })?,
        CoherenceModel::new("M5", dets, vec![Equal(1, 2)], |_, _| Zero)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(s: &str) -> SlaterDeterminant {
        SlaterDeterminant::parse(s).unwrap()
    }

    fn occupations(dets: &[SlaterDeterminant], pops: &[f64]) -> Vec<f64> {
        (0..dets[0].n_orbitals())
            .map(|e| {
                dets.iter()
                    .zip(pops)
                    .filter(|(d, _)| d.is_occupied(e))
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }

    #[test]
    fn ground_state_fit() {
        let models = photoexcitation_models(4).unwrap();
        let y = occupations(&models[4].dets, &[1.0, 0.0, 0.0]);
        for m in &models {
            let fit = least_squares_populations(m, &y).unwrap();
            assert!(fit.residual < 1e-12);
            assert!(fit.unique);
            assert!((fit.populations[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_lumo_populations_fit() {
        let models = photoexcitation_models(4).unwrap();
        let p = 0.07;
        let y = occupations(&models[4].dets, &[1.0 - 2.0 * p, p, p]);
        for m in &models[1..] {
            if m.name() == "M3" {
                continue;
            }
            let fit = least_squares_populations(m, &y).unwrap();
            assert!(fit.residual < 1e-12, "{}", m.name());
            for (a, b) in fit.populations.iter().zip([1.0 - 2.0 * p, p, p]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let obs = ObservationSeries::new(vec![0.0], vec![y], vec![4.0], None).unwrap();
        assert!(fit_populations(&models[0], &obs, 0).unwrap().is_none());
    }

    #[test]
    fn envelopes_of_named_models() {
        let models = photoexcitation_models(4).unwrap();
        let p = 0.1;
        let m1 = purity_envelope(&models[0], &[1.0 - p, p, 0.0]).unwrap();
        assert!((m1.p1_coh - 4.0).abs() < 1e-12 && (m1.p1_inc - 4.0).abs() < 1e-12);
        assert!((m1.p2_coh - 6.0).abs() < 1e-12);
        let pops = [1.0 - 2.0 * p, p, p];
        let m4 = purity_envelope(&models[3], &pops).unwrap();
        let m5 = purity_envelope(&models[4], &pops).unwrap();
        assert_eq!(m5.p1_inc, m5.p1_coh);
        assert!((m4.p1_inc - m5.p1_inc).abs() < 1e-12);
        assert!((m4.p2_inc - m5.p2_inc - 2.0 * p * p).abs() < 1e-12);
    }

    #[test]
    fn unsatisfiable_models_are_rejected() {
        let dets = vec![det("1100"), det("1010"), det("0110")];
        let bad = CoherenceModel::new("x", dets.clone(), vec![], |i, j| {
            if (i, j) == (0, 2) {
                CoherenceRegime::Zero
            } else {
                CoherenceRegime::Full
            }
        });
        // Emptying one determinant satisfies the constraints.
        assert!(bad.is_ok());
        let w = bad.unwrap().witness().unwrap();
        assert!(w[(0, 2)] == 0.0);
        let none = CoherenceModel::new(
            "y",
            dets,
            vec![
                PopulationConstraint::Zero(0),
                PopulationConstraint::Zero(1),
                PopulationConstraint::Zero(2),
            ],
            |_, _| CoherenceRegime::Free,
        );
        assert!(none.is_err());
    }

    #[test]
    fn non_unique_fit_reports_solution_set() {
        // Φ(0,1) + Φ(2,3) and Φ(0,2) + Φ(1,3) give identical orbital populations.
        let dets = vec![det("1100"), det("0011"), det("1010"), det("0101")];
        let model =
            CoherenceModel::new("pairs", dets, vec![], |_, _| CoherenceRegime::Zero).unwrap();
        let fit = least_squares_populations(&model, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(fit.residual < 1e-12);
        assert!(!fit.unique);
        assert_eq!(fit.directions.len(), 1);
        assert_eq!(fit.vertices.len(), 2);
    }

    #[test]
    fn candidate_enumeration() {
        let models = photoexcitation_models(4).unwrap();
        let space = models[4].dets.to_vec();
        let p = 0.05;
        let y = occupations(&space, &[1.0 - 2.0 * p, p, p]);
        let found = enumerate_candidates(&space, &y, 8).unwrap();
        let names: Vec<&str> = found.models.iter().map(|m| m.name()).collect();
        assert_eq!(names, ["{0,1,2}"]);
        let ground =
            enumerate_candidates(&space, &occupations(&space, &[1.0, 0.0, 0.0]), 8).unwrap();
        assert_eq!(ground.models[0].name(), "{0}");
        let mut impossible = y.clone();
        impossible[0] = 0.5;
        impossible[3] = 0.5;
        let none = enumerate_candidates(&space, &impossible, 8).unwrap();
        assert!(none.models.is_empty());
        assert!(none.diagnostic.is_some());
        let capped = enumerate_candidates(&space, &y, 2).unwrap();
        assert_eq!(capped.pruned, 1);
    }

    #[test]
    fn envelope_rule_discards_overly_coherent_model() {
        let models = photoexcitation_models(4).unwrap();
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let pops: Vec<[f64; 3]> = times
            .iter()
            .map(|t| {
                let p = 0.02 * t;
                [1.0 - 2.0 * p, p, p]
            })
            .collect();
        let occ: Vec<Vec<f64>> = pops
            .iter()
            .map(|a| occupations(&models[4].dets, a))
            .collect();
        let env: Vec<Envelope> = pops
            .iter()
            .map(|a| purity_envelope(&models[4], a).unwrap())
            .collect();
        let obs = ObservationSeries::new(
            times,
            occ,
            env.iter().map(|e| e.p1_inc).collect(),
            Some(env.iter().map(|e| e.p2_inc).collect()),
        )
        .unwrap();
        let verdict = discard(&models, &obs, &DiscardOptions::default()).unwrap();
        assert_eq!(verdict.survivors, ["M5"]);
        let m4 = &verdict.models[3];
        assert_eq!(m4.violation.as_ref().unwrap().stage, Stage::TwoBody);
        let m1 = &verdict.models[0];
        assert_eq!(m1.violation.as_ref().unwrap().stage, Stage::OneBody);
        assert!(!m1.populations_consistent);
    }
}
