//! Monte Carlo estimates of polynomial joining averages
//!
//! ```text
//! ∫ f₀ ⊗ f₁ ⊗ ⋯ ⊗ f_k dλ_T = ⨍₀^T ∫ f₀(x₀) ∏ᵢ fᵢ(φᵢ(t,h)·xᵢ) dλ(x) dt
//! ```
//!
//! with a composite midpoint rule in `t` and independent joining draws for
//! `λ`, plus invariance checks, single-map mean ergodic averages and the van
//! der Corput correlation diagnostic.
//!
//! Draws are taken in chunks of [`CHUNK`] samples; chunk `c` uses its own
//! generator seeded with `seed + c`, and chunk sums are combined in chunk
//! order, so results do not depend on the number of threads.

use std::fmt::Write as _;

use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FnKind, NilSystem, Prepared, SystemKind, TestFunction};
use crate::error::{Error, Result};
use crate::lie::GroupElement;
use crate::polymap::PolyMap;
use crate::rational::{format_rational, int, ratio, Rational};
use crate::zariski::{generic_sample, vanishing_variety, GenericSample, MeagreSet, Variety};

/// Samples per generator chunk.
pub const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum JoiningKind {
    /// One Haar point copied to every factor.
    Diagonal,
    /// Independent Haar points.
    Product,
    /// A diagonal draw pushed forward by a fixed element in each factor.
    /// Not invariant under the diagonal action in general.
    Graph(Vec<GroupElement>),
}

#[derive(Clone, Debug)]
pub struct JoiningSpec {
    systems: Vec<NilSystem>,
    kind: JoiningKind,
    graph: Vec<Prepared>,
}

impl JoiningSpec {
    pub fn new(systems: Vec<NilSystem>, kind: JoiningKind) -> Result<Self> {
        if systems.is_empty() {
            return Err(Error::InvalidSetting("a joining needs at least one system".into()));
        }
        let identical = systems.iter().all(|s| s == &systems[0]);
        let mut graph = Vec::new();
        match &kind {
            JoiningKind::Diagonal if !identical => {
                return Err(Error::InvalidSetting("diagonal joining needs identical systems".into()))
            }
            JoiningKind::Graph(gs) => {
                if !identical {
                    return Err(Error::InvalidSetting("graph joining needs identical systems".into()));
                }
                if gs.len() != systems.len() {
                    return Err(Error::ArityMismatch { expected: systems.len(), got: gs.len() });
                }
                for (s, g) in systems.iter().zip(gs) {
                    graph.push(s.prepare(g)?);
                }
            }
            _ => {}
        }
        Ok(Self { systems, kind, graph })
    }

    /// `k + 1` copies of `sys` with the diagonal measure.
    pub fn diagonal(sys: NilSystem, k: usize) -> Self {
        Self { systems: vec![sys; k + 1], kind: JoiningKind::Diagonal, graph: Vec::new() }
    }

    pub fn product(systems: Vec<NilSystem>) -> Result<Self> {
        Self::new(systems, JoiningKind::Product)
    }

    pub fn systems(&self) -> &[NilSystem] {
        &self.systems
    }

    pub fn kind(&self) -> &JoiningKind {
        &self.kind
    }

    /// Number of factors `k + 1`.
    pub fn arity(&self) -> usize {
        self.systems.len()
    }

    /// Whether the sampled measure is invariant under the diagonal action by
    /// construction.
    pub fn is_diagonal_invariant(&self) -> bool {
        !matches!(self.kind, JoiningKind::Graph(_))
    }

    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [Vec<f64>]) {
        match self.kind {
            JoiningKind::Product => {
                for (s, o) in self.systems.iter().zip(out.iter_mut()) {
                    *o = s.haar_point(rng);
                }
            }
            JoiningKind::Diagonal => {
                let x = self.systems[0].haar_point(rng);
                for o in out.iter_mut() {
                    o.clone_from(&x);
                }
            }
            JoiningKind::Graph(_) => {
                let x = self.systems[0].haar_point(rng);
                for ((s, g), o) in self.systems.iter().zip(&self.graph).zip(out.iter_mut()) {
                    s.act_prepared(g, &x, o);
                }
            }
        }
    }
}

/// Quadrature and sampling settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    #[serde(with = "crate::rational::serde_str")]
    pub dt: Rational,
    pub n_samples: usize,
    pub seed: u64,
}

impl Settings {
    pub fn new(dt: Rational, n_samples: usize, seed: u64) -> Self {
        Self { dt, n_samples, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Per-horizon estimates of one convergence scan.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageReport {
    pub grid: Vec<Rational>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Largest difference between estimates over the last
    /// `max(3, ⌈len/4⌉)` horizons (or all of them if fewer).
    pub cauchy_gap: f64,
    pub cauchy_tail: usize,
    pub dt: Rational,
    pub n_samples: usize,
    pub seed: u64,
}

impl AverageReport {
    /// Largest standard error over the horizons entering `cauchy_gap`.
    pub fn tail_std_error(&self) -> f64 {
        let n = self.std_errors.len();
        self.std_errors[n - self.cauchy_tail..].iter().copied().fold(0.0, f64::max)
    }

    /// `T,estimate,std_error,cauchy_gap`, one row per horizon.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,estimate,std_error,cauchy_gap\n");
        for ((t, e), se) in self.grid.iter().zip(&self.estimates).zip(&self.std_errors) {
            let _ = writeln!(s, "{},{e},{se},{}", format_rational(t), self.cauchy_gap);
        }
        s
    }
}

impl AverageReport {
    pub fn from_estimates(grid: &[Rational], ests: &[Estimate], settings: &Settings) -> Self {
        let tail = cauchy_tail(ests.len());
        let last = &ests[ests.len() - tail..];
        let mut gap: f64 = 0.0;
        for a in last {
            for b in last {
                gap = gap.max((a.value - b.value).abs());
            }
        }
        AverageReport {
            grid: grid.to_vec(),
            estimates: ests.iter().map(|e| e.value).collect(),
            std_errors: ests.iter().map(|e| e.std_error).collect(),
            cauchy_gap: gap,
            cauchy_tail: tail,
            dt: settings.dt.clone(),
            n_samples: settings.n_samples,
            seed: settings.seed,
        }
    }
}

/// Tail length used for the Cauchy gap of a grid with `len` horizons.
pub fn cauchy_tail(len: usize) -> usize {
    len.min(3.max(len.div_ceil(4)))
}

// ---------------------------------------------------------------------------
// shared machinery

/// Exact flow elements at the quadrature nodes, floated once.
struct Plan {
    k: usize,
    steps: usize,
    /// `table[j * k + i]` acts on factor `i + 1` at node `j`.
    table: Vec<Prepared>,
    horizons: Vec<usize>,
}

fn check_grid(grid: &[Rational], dt: &Rational) -> Result<Vec<usize>> {
    if !dt.is_positive() {
        return Err(Error::InvalidSetting("dt must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidSetting("empty horizon grid".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    for (i, t) in grid.iter().enumerate() {
        if i > 0 && t <= &grid[i - 1] {
            return Err(Error::InvalidSetting("horizon grid must be strictly increasing".into()));
        }
        let steps = t / dt;
        if !steps.is_integer() || !steps.is_positive() {
            return Err(Error::InvalidSetting(format!(
                "horizon {} is not a positive multiple of dt = {}",
                format_rational(t),
                format_rational(dt)
            )));
        }
        let n = steps.to_integer();
        out.push(usize::try_from(n).map_err(|_| Error::InvalidSetting("too many time steps".into()))?);
    }
    Ok(out)
}

/// The quadrature node `(j + ½)·dt`.
pub fn node(j: usize, dt: &Rational) -> Rational {
    (int(j as i64) + ratio(1, 2)) * dt
}

fn evaluation_point(t: Rational, h: &[Rational]) -> Vec<Rational> {
    let mut p = Vec::with_capacity(h.len() + 1);
    p.push(t);
    p.extend_from_slice(h);
    p
}

fn check_maps(systems: &[NilSystem], maps: &[PolyMap], h: &[Rational]) -> Result<()> {
    if maps.len() != systems.len() {
        return Err(Error::ArityMismatch { expected: systems.len(), got: maps.len() });
    }
    for (s, m) in systems.iter().zip(maps) {
        if !m.algebra().same_as(s.acting_algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        if m.vars().len() != h.len() + 1 {
            return Err(Error::ArityMismatch { expected: m.vars().len() - 1, got: h.len() });
        }
    }
    Ok(())
}

fn build_plan(
    systems: &[NilSystem],
    maps: &[PolyMap],
    h: &[Rational],
    grid: &[Rational],
    dt: &Rational,
) -> Result<Plan> {
    check_maps(systems, maps, h)?;
    let horizons = check_grid(grid, dt)?;
    let steps = *horizons.last().expect("nonempty grid");
    let k = maps.len();
    let rows: Vec<Vec<Prepared>> = (0..steps)
        .into_par_iter()
        .map(|j| {
            let p = evaluation_point(node(j, dt), h);
            systems.iter().zip(maps).map(|(s, m)| s.prepare(&m.eval(&p)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan { k, steps, table: rows.into_iter().flatten().collect(), horizons })
}

fn check_fns(systems: &[NilSystem], fns: &[TestFunction]) -> Result<()> {
    if fns.len() != systems.len() {
        return Err(Error::ArityMismatch { expected: systems.len(), got: fns.len() });
    }
    for (s, f) in systems.iter().zip(fns) {
        f.check(s)?;
    }
    Ok(())
}

/// Sums and sums of squares of several per-sample quantities.
#[derive(Clone, Debug)]
struct Moments {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Moments {
    fn new(m: usize) -> Self {
        Self { sum: vec![0.0; m], sumsq: vec![0.0; m] }
    }

    fn add(&mut self, values: &[f64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
    }

    fn estimate(&self, idx: usize, n: usize) -> Estimate {
        let nf = n as f64;
        let mean = self.sum[idx] / nf;
        let var = if n > 1 { ((self.sumsq[idx] - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Estimate { value: mean, std_error: (var / nf).sqrt() }
    }
}

/// Runs `per_sample` on `n` draws in seeded chunks and reduces in order.
fn monte_carlo<F>(n: usize, seed: u64, width: usize, per_sample: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
            let count = CHUNK.min(n - c * CHUNK);
            let mut m = Moments::new(width);
            let mut buf = vec![0.0; width];
            for _ in 0..count {
                per_sample(&mut rng, &mut buf);
                m.add(&buf);
            }
            m
        })
        .collect();
    let mut total = Moments::new(width);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Optional per-factor translations applied before or after the flow.
struct Twist<'a> {
    before: Option<&'a [Prepared]>,
    /// `None` entries are identities.
    after: Option<&'a [Option<Prepared>]>,
}

const NO_TWIST: Twist<'static> = Twist { before: None, after: None };

/// Writes the running time averages at every horizon into `out`.
fn integrate(
    systems: &[NilSystem],
    fns: &[TestFunction],
    plan: &Plan,
    draw: &[Vec<f64>],
    twist: &Twist,
    scratch: &mut [Vec<f64>],
    out: &mut [f64],
) {
    let k = plan.k;
    // scratch[0..=k]: twisted starting points; scratch[k+1]: flow output;
    // scratch[k+2]: after-twist output
    for i in 0..=k {
        match twist.before {
            Some(b) => systems[i].act_prepared(&b[i], &draw[i], &mut scratch[i]),
            None => scratch[i].clone_from(&draw[i]),
        }
    }
    let v0 = {
        let x0 = &scratch[0];
        match twist.after.and_then(|a| a[0].as_ref()) {
            Some(g) => {
                let mut y = vec![0.0; x0.len()];
                systems[0].act_prepared(g, x0, &mut y);
                fns[0].eval(&y)
            }
            None => fns[0].eval(x0),
        }
    };
    let mut flow = std::mem::take(&mut scratch[k + 1]);
    let mut after = std::mem::take(&mut scratch[k + 2]);
    let mut sum = 0.0;
    let mut next = 0;
    for j in 0..plan.steps {
        let mut prod = v0;
        for i in 1..=k {
            let f = &fns[i];
            if f.is_constant() {
                prod *= f.mean();
                continue;
            }
            let sys = &systems[i];
            let d = sys.point_dim();
            flow.resize(d, 0.0);
            sys.act_prepared(&plan.table[j * k + i - 1], &scratch[i], &mut flow);
            let y = match twist.after.and_then(|a| a[i].as_ref()) {
                Some(g) => {
                    after.resize(d, 0.0);
                    sys.act_prepared(g, &flow, &mut after);
                    &after
                }
                None => &flow,
            };
            prod *= f.eval(y);
        }
        sum += prod;
        if j + 1 == plan.horizons[next] {
            out[next] = sum / (j + 1) as f64;
            next += 1;
        }
    }
    scratch[k + 1] = flow;
    scratch[k + 2] = after;
}

fn scratch_for(systems: &[NilSystem]) -> Vec<Vec<f64>> {
    let mut s: Vec<Vec<f64>> = systems.iter().map(|x| vec![0.0; x.point_dim()]).collect();
    let d = systems.iter().map(NilSystem::point_dim).max().unwrap_or(0);
    s.push(vec![0.0; d]);
    s.push(vec![0.0; d]);
    s
}

fn flows_for(joining: &JoiningSpec) -> &[NilSystem] {
    &joining.systems[1..]
}

// ---------------------------------------------------------------------------
// joining averages

/// `∫ f₀ ⊗ ⋯ ⊗ f_k dλ_T` for `k = maps.len()` and a single horizon `T`.
pub fn joining_average(
    joining: &JoiningSpec,
    maps: &[PolyMap],
    h: &[Rational],
    fns: &[TestFunction],
    horizon: &Rational,
    settings: &Settings,
) -> Result<Estimate> {
    let r = convergence_scan(joining, maps, h, fns, std::slice::from_ref(horizon), settings)?;
    Ok(Estimate { value: r.estimates[0], std_error: r.std_errors[0] })
}

/// Joining averages at every horizon of `grid` from one set of draws.
pub fn convergence_scan(
    joining: &JoiningSpec,
    maps: &[PolyMap],
    h: &[Rational],
    fns: &[TestFunction],
    grid: &[Rational],
    settings: &Settings,
) -> Result<AverageReport> {
    check_fns(&joining.systems, fns)?;
    if settings.n_samples == 0 {
        return Err(Error::InvalidSetting("n_samples must be positive".into()));
    }
    let plan = build_plan(flows_for(joining), maps, h, grid, &settings.dt)?;
    let width = grid.len();
    let systems = &joining.systems;
    let moments = monte_carlo(settings.n_samples, settings.seed, width, |rng, out| {
        let mut draw = scratch_for(systems);
        draw.truncate(systems.len());
        joining.draw(rng, &mut draw);
        let mut scratch = scratch_for(systems);
        integrate(systems, fns, &plan, &draw, &NO_TWIST, &mut scratch, out);
    });
    let ests: Vec<Estimate> = (0..width).map(|i| moments.estimate(i, settings.n_samples)).collect();
    Ok(AverageReport::from_estimates(grid, &ests, settings))
}

// ---------------------------------------------------------------------------
// invariance

/// `(g, g, …, g)`.
pub fn diagonal_tuple(g: &GroupElement, arity: usize) -> Vec<GroupElement> {
    vec![g.clone(); arity]
}

/// `(e, φ₁(t*, h), …, φ_k(t*, h))`.
pub fn offdiagonal_tuple(
    joining: &JoiningSpec,
    maps: &[PolyMap],
    t_star: &Rational,
    h: &[Rational],
) -> Result<Vec<GroupElement>> {
    check_maps(flows_for(joining), maps, h)?;
    let p = evaluation_point(t_star.clone(), h);
    let mut out = vec![GroupElement::identity(joining.systems[0].acting_algebra().clone())];
    for m in maps {
        out.push(m.eval(&p)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub grid: Vec<Rational>,
    /// `∫ F dλ_T` from the reference draws.
    pub reference: Vec<Estimate>,
    /// `deviations[tuple][horizon]`: the absolute mean paired difference
    /// `∫ F∘u^g dλ_T − ∫ F dλ_T` and its standard error.
    pub deviations: Vec<Vec<Estimate>>,
}

impl InvarianceReport {
    /// The convergence scan of the reference draws, identical to what
    /// [`convergence_scan`] returns for the same settings.
    pub fn convergence(&self, settings: &Settings) -> AverageReport {
        AverageReport::from_estimates(&self.grid, &self.reference, settings)
    }
}

/// Deviations at a single horizon, one per tuple.
#[allow(clippy::too_many_arguments)]
pub fn invariance_check(
    joining: &JoiningSpec,
    maps: &[PolyMap],
    h: &[Rational],
    fns: &[TestFunction],
    horizon: &Rational,
    tuples: &[Vec<GroupElement>],
    settings: &Settings,
) -> Result<Vec<Estimate>> {
    let r = invariance_scan(joining, maps, h, fns, std::slice::from_ref(horizon), tuples, settings)?;
    Ok(r.deviations.into_iter().map(|d| d[0]).collect())
}

/// For each tuple `g`, compares `∫ F∘u_×^g dλ_T` with `∫ F dλ_T` on shared
/// draws. When the joining is invariant under the diagonal action, the
/// reference integrand is evaluated at the draw moved diagonally by `g₀`
/// (which has the same law), so diagonal tuples over commuting flows give
/// identical integrands sample by sample.
#[allow(clippy::too_many_arguments)]
pub fn invariance_scan(
    joining: &JoiningSpec,
    maps: &[PolyMap],
    h: &[Rational],
    fns: &[TestFunction],
    grid: &[Rational],
    tuples: &[Vec<GroupElement>],
    settings: &Settings,
) -> Result<InvarianceReport> {
    check_fns(&joining.systems, fns)?;
    if settings.n_samples == 0 {
        return Err(Error::InvalidSetting("n_samples must be positive".into()));
    }
    let systems = &joining.systems;
    let mut prepared: Vec<Vec<Option<Prepared>>> = Vec::with_capacity(tuples.len());
    let mut pushes: Vec<Option<Vec<Prepared>>> = Vec::with_capacity(tuples.len());
    for t in tuples {
        if t.len() != systems.len() {
            return Err(Error::ArityMismatch { expected: systems.len(), got: t.len() });
        }
        let p = systems
            .iter()
            .zip(t)
            .map(|(s, g)| if g.is_identity() { Ok(None) } else { s.prepare(g).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let push = (joining.is_diagonal_invariant() && !t[0].is_identity()).then(|| {
            systems.iter().map(|s| s.prepare(&t[0])).collect::<Result<Vec<_>>>()
        });
        pushes.push(push.transpose()?);
        prepared.push(p);
    }
    let plan = build_plan(flows_for(joining), maps, h, grid, &settings.dt)?;
    let w = grid.len();
    let m = tuples.len();
    // layout: [reference per horizon | per tuple: difference per horizon]
    let width = w * (1 + m);
    let moments = monte_carlo(settings.n_samples, settings.seed, width, |rng, out| {
        let mut draw = scratch_for(systems);
        draw.truncate(systems.len());
        joining.draw(rng, &mut draw);
        let mut scratch = scratch_for(systems);
        let mut reference = vec![0.0; w];
        integrate(systems, fns, &plan, &draw, &NO_TWIST, &mut scratch, &mut reference);
        out[..w].copy_from_slice(&reference);
        let mut shifted = vec![0.0; w];
        let mut base = vec![0.0; w];
        for (ti, p) in prepared.iter().enumerate() {
            let base_ref: &[f64] = match &pushes[ti] {
                Some(push) => {
                    let tw = Twist { before: Some(push), after: None };
                    integrate(systems, fns, &plan, &draw, &tw, &mut scratch, &mut base);
                    &base
                }
                None => &reference,
            };
            let tw = Twist { before: None, after: Some(p) };
            integrate(systems, fns, &plan, &draw, &tw, &mut scratch, &mut shifted);
            for hz in 0..w {
                out[w * (1 + ti) + hz] = shifted[hz] - base_ref[hz];
            }
        }
    });
    let n = settings.n_samples;
    let reference = (0..w).map(|i| moments.estimate(i, n)).collect();
    let deviations = (0..m)
        .map(|ti| {
            (0..w)
                .map(|hz| {
                    let e = moments.estimate(w * (1 + ti) + hz, n);
                    Estimate { value: e.value.abs(), std_error: e.std_error }
                })
                .collect()
        })
        .collect();
    Ok(InvarianceReport { grid: grid.to_vec(), reference, deviations })
}

// ---------------------------------------------------------------------------
// single-map averages

/// What the limit of `⨍₀^T f(φ(t,h)·x) dt` should be for a character `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `f` is invariant under the flow at this `h`, so the average is `f`
    /// itself; otherwise it tends to 0.
    pub invariant: bool,
    pub limit_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanErgodicReport {
    pub h: Vec<Rational>,
    pub grid: Vec<Rational>,
    /// `‖A_T f‖₂` estimates with delta-method standard errors.
    pub norms: Vec<Estimate>,
    /// `‖A_T f − f‖₂` estimates.
    pub distances: Vec<Estimate>,
    pub prediction: Option<Prediction>,
}

/// The linear functional `ℓ` on the acting algebra with
/// `f(g·x) = f(x)` shifted in phase by `2π ℓ(log g)`, for characters.
pub fn character_functional(sys: &NilSystem, f: &TestFunction) -> Option<Vec<Rational>> {
    if f.kind != FnKind::Character {
        return None;
    }
    let own: Vec<Rational> = match sys.kind() {
        SystemKind::Torus { .. } => f.freq.iter().map(|&k| int(k)).collect(),
        SystemKind::Heisenberg3 => vec![int(f.freq[0]), int(f.freq[1]), int(0)],
    };
    Some(match sys.embedding() {
        None => own,
        Some(e) => {
            let m = e.source().dim();
            (0..m)
                .map(|j| e.matrix().iter().zip(&own).map(|(row, l)| &row[j] * l).sum())
                .collect()
        }
    })
}

/// `‖f‖₂` for a test function.
pub fn l2_norm(f: &TestFunction) -> f64 {
    if f.is_constant() {
        f.mean().abs()
    } else {
        std::f64::consts::FRAC_1_SQRT_2
    }
}

pub fn predict_limit(sys: &NilSystem, phi: &PolyMap, h: &[Rational], f: &TestFunction) -> Result<Option<Prediction>> {
    let Some(l) = character_functional(sys, f) else {
        return Ok(None);
    };
    let v = vanishing_variety(phi, &l)?;
    let invariant = v.contains(h)?;
    Ok(Some(Prediction { invariant, limit_norm: if invariant { l2_norm(f) } else { 0.0 } }))
}

/// `‖⨍₀^T f∘u^{φ(t,h)} dt‖₂` over Haar samples, at every horizon.
pub fn mean_ergodic_base(
    sys: &NilSystem,
    phi: &PolyMap,
    h: &[Rational],
    f: &TestFunction,
    grid: &[Rational],
    settings: &Settings,
) -> Result<MeanErgodicReport> {
    f.check(sys)?;
    if settings.n_samples == 0 {
        return Err(Error::InvalidSetting("n_samples must be positive".into()));
    }
    let systems = vec![sys.clone(), sys.clone()];
    let fns = vec![TestFunction::one(0), f.clone()];
    let plan = build_plan(&systems[1..], std::slice::from_ref(phi), h, grid, &settings.dt)?;
    let w = grid.len();
    let moments = monte_carlo(settings.n_samples, settings.seed, 2 * w, |rng, out| {
        let x = sys.haar_point(rng);
        let draw = vec![x.clone(), x.clone()];
        let mut scratch = scratch_for(&systems);
        let mut avg = vec![0.0; w];
        integrate(&systems, &fns, &plan, &draw, &NO_TWIST, &mut scratch, &mut avg);
        let fx = f.eval(&x);
        for hz in 0..w {
            out[hz] = avg[hz] * avg[hz];
            out[w + hz] = (avg[hz] - fx) * (avg[hz] - fx);
        }
    });
    let n = settings.n_samples;
    let root = |e: Estimate| {
        let r = e.value.max(0.0).sqrt();
        let se = if r > 0.0 { e.std_error / (2.0 * r) } else { e.std_error.sqrt() };
        Estimate { value: r, std_error: se }
    };
    Ok(MeanErgodicReport {
        h: h.to_vec(),
        grid: grid.to_vec(),
        norms: (0..w).map(|i| root(moments.estimate(i, n))).collect(),
        distances: (0..w).map(|i| root(moments.estimate(w + i, n))).collect(),
        prediction: predict_limit(sys, phi, h, f)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyReport {
    /// Parameters where `f` is invariant under the flow; `None` when that
    /// holds for every parameter.
    pub variety: Option<Variety>,
    pub sample: GenericSample,
    pub generic: MeanErgodicReport,
    pub exceptional: Vec<MeanErgodicReport>,
}

/// Mean ergodic averages at a certified generic parameter (off the variety
/// where `f` becomes invariant) and at the given exceptional parameters.
#[allow(clippy::too_many_arguments)]
pub fn dichotomy(
    sys: &NilSystem,
    phi: &PolyMap,
    f: &TestFunction,
    exceptional: &[Vec<Rational>],
    grid: &[Rational],
    settings: &Settings,
    sample_seed: u64,
    max_attempts: usize,
) -> Result<DichotomyReport> {
    let l = character_functional(sys, f)
        .ok_or_else(|| Error::InvalidSetting("the dichotomy needs a character test function".into()))?;
    let v = vanishing_variety(phi, &l)?;
    let mut meagre = MeagreSet::new(phi.param_vars());
    let variety = if v.is_proper() {
        meagre.push(v.clone())?;
        Some(v)
    } else {
        None
    };
    let sample = generic_sample(&meagre, sample_seed, max_attempts)?;
    let generic = mean_ergodic_base(sys, phi, &sample.point, f, grid, settings)?;
    let exceptional = exceptional
        .iter()
        .map(|h| mean_ergodic_base(sys, phi, h, f, grid, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(DichotomyReport { variety, sample, generic, exceptional })
}

// ---------------------------------------------------------------------------
// van der Corput diagnostic

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    /// `|⨍₀^T a|`
    pub lhs: f64,
    /// `⨍₀^S ⨍₀^T a(t+s) a(t) dt ds`
    pub rhs: f64,
}

/// Floor under `|rhs|` in [`VdcReport::ratio`].
pub const VDC_FLOOR: f64 = 1e-4;

impl VdcReport {
    /// `lhs / √max(|rhs|, VDC_FLOOR)`: the constant `C` in `lhs ≤ C√rhs`.
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs.abs().max(VDC_FLOOR).sqrt()
    }
}

/// Both sides of the van der Corput comparison for a trajectory sampled at
/// `a[j] = a(j·step)`, by the trapezoid rule. `S` and `T` must be multiples
/// of `step` and the samples must reach `T + S`.
pub fn vdc_check(a: &[f64], step: f64, s: f64, t: f64) -> Result<VdcReport> {
    if !(step > 0.0 && s > 0.0 && t > 0.0) {
        return Err(Error::InvalidSetting("step, S and T must be positive".into()));
    }
    let to_steps = |x: f64, what: &str| {
        let n = (x / step).round();
        if ((n * step - x) / x).abs() > 1e-9 {
            Err(Error::InvalidSetting(format!("{what} is not a multiple of the step")))
        } else {
            Ok(n as usize)
        }
    };
    let ns = to_steps(s, "S")?;
    let nt = to_steps(t, "T")?;
    let available = a.len().saturating_sub(1) as f64 * step;
    if a.len() < ns + nt + 1 {
        return Err(Error::GridTooShort { needed: s + t, available });
    }
    let mut cum = vec![0.0; ns + nt + 1];
    for j in 1..cum.len() {
        cum[j] = cum[j - 1] + 0.5 * step * (a[j - 1] + a[j]);
    }
    let lhs = (cum[nt] / t).abs();
    let g = |j: usize| a[j] * (cum[j + ns] - cum[j]);
    let mut inner = 0.0;
    for j in 1..=nt {
        inner += 0.5 * step * (g(j - 1) + g(j));
    }
    Ok(VdcReport { lhs, rhs: inner / (s * t) })
}

/// `a(j·step) = f(φ(j·step, h)·x)` for `j = 0..=len`, with the flow
/// evaluated exactly at each rational time.
pub fn trajectory(
    sys: &NilSystem,
    phi: &PolyMap,
    h: &[Rational],
    f: &TestFunction,
    x: &[f64],
    step: &Rational,
    len: usize,
) -> Result<Vec<f64>> {
    f.check(sys)?;
    check_maps(std::slice::from_ref(sys), std::slice::from_ref(phi), h)?;
    if x.len() != sys.point_dim() {
        return Err(Error::ArityMismatch { expected: sys.point_dim(), got: x.len() });
    }
    (0..=len)
        .into_par_iter()
        .map(|j| {
            let p = evaluation_point(int(j as i64) * step, h);
            let g = sys.prepare(&phi.eval(&p)?)?;
            let mut y = vec![0.0; x.len()];
            sys.act_prepared(&g, x, &mut y);
            Ok(f.eval(&y))
        })
        .collect()
}
