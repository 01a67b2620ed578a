//! One function per subcommand. Each returns the three output documents and
//! a short text summary; nothing here touches the filesystem.

use std::fmt::Write as _;
use std::sync::Arc;

use nilflow::averaging::{
    convergence_scan, dichotomy, diagonal_tuple, invariance_scan, mean_ergodic_base, offdiagonal_tuple, trajectory,
    vdc_check, AverageReport, Estimate, JoiningKind, JoiningSpec, MeanErgodicReport, Settings,
};
use nilflow::averaging::character_functional;
use nilflow::pet::TraceEnd;
use nilflow::rational::{format_rational, to_f64, Rational};
use nilflow::zariski::Variety;
use nilflow::{
    generic_sample, pet_trace_with, vanishing_variety, weight, Descent, GroupElement, MeagreSet, MultiPoly,
    NilSystem, PolyFamily, PolyMap,
};
use serde_json::{json, Value};

use crate::config::{
    point_or_origin, AverageMode, AverageOptions, ExperimentConfig, JoiningDoc, ParamChoice, TupleDoc,
};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyPoly,
    Pet,
    Average,
    Generic,
    Vdc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyPoly => "verify-poly",
            Command::Pet => "pet",
            Command::Average => "average",
            Command::Generic => "generic",
            Command::Vdc => "vdc",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outputs {
    /// The config with every default filled in.
    pub sidecar: ExperimentConfig,
    pub report: String,
    pub certificate: Value,
    pub summary: String,
    pub exit_code: i32,
}

pub fn run(cmd: Command, mut cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    if let Some(c) = &cfg.command {
        if c != cmd.name() {
            return Err(CliError::Config(format!("config is for `{c}`, not `{}`", cmd.name())));
        }
    }
    cfg.command = Some(cmd.name().into());
    match cmd {
        Command::VerifyPoly => verify_poly(cfg),
        Command::Pet => pet(cfg),
        Command::Average => average(cfg),
        Command::Generic => generic(cfg),
        Command::Vdc => vdc(cfg),
    }
}

fn strings(ps: &[MultiPoly]) -> Vec<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

fn rationals(rs: &[Rational]) -> Vec<String> {
    rs.iter().map(format_rational).collect()
}

fn done(sidecar: ExperimentConfig, report: String, certificate: Value, summary: String) -> Outputs {
    Outputs { sidecar, report, certificate, summary, exit_code: 0 }
}

// ---------------------------------------------------------------------------

fn verify_poly(cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    let maps = cfg.family()?;
    let mut csv = String::from("member,degree,class,weight,leading_coefficient\n");
    let mut summary = String::from("member  degree  class  weight\n");
    let mut members = Vec::new();
    for (i, m) in maps.iter().enumerate() {
        let member = |e| CliError::Member(i, e);
        let degree = m.polynomial_degree().map_err(member)?;
        if m.is_identity() {
            let _ = writeln!(csv, "{i},{degree},,,");
            let _ = writeln!(summary, "{i:>6}  {degree:>6}  {:>5}  {:>6}", "-", "-");
            members.push(json!({"member": i, "degree": degree, "identity": true}));
            continue;
        }
        let class = m.internal_class().map_err(member)?;
        let lt = m.leading_term().map_err(member)?;
        let w = weight(m).map_err(member)?;
        let coef = strings(&lt.coefficient);
        let _ = writeln!(csv, "{i},{degree},{class},\"{w}\",\"{}\"", coef.join("; "));
        let _ = writeln!(summary, "{i:>6}  {degree:>6}  {class:>5}  {:>6}", w.to_string());
        members.push(json!({
            "member": i,
            "degree": degree,
            "identity": false,
            "class": class,
            "weight": [w.class, w.degree],
            "leading_term": {"class": lt.class, "degree": lt.degree, "coefficient": coef},
        }));
    }
    let cert = json!({"well_formed": true, "members": members});
    Ok(done(cfg, csv, cert, summary))
}

// ---------------------------------------------------------------------------

fn descent_label(d: &Descent) -> String {
    match d {
        Descent::Weight(w) => format!("weight {w}"),
        Descent::ClassSize(w) => format!("class size {w}"),
    }
}

fn pet(mut cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    let maps = cfg.family()?;
    if maps.is_empty() {
        return Err(CliError::Config("pet needs a nonempty family".into()));
    }
    let opts = cfg.pet.get_or_insert_with(Default::default).clone();
    let family = PolyFamily::new(maps)?;
    let trace = pet_trace_with(&family, &opts.limits())?;
    let mut csv = String::from("step,distinct,total,dropped,pivot,pivot_weight,descent\n");
    let mut summary = String::from("step  distinct  total  pivot  weight  descent\n");
    for (i, s) in trace.steps.iter().enumerate() {
        let d = descent_label(&s.descent);
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},\"{}\",{d}",
            s.distinct, s.total, s.dropped, s.pivot, s.pivot_weight
        );
        let _ = writeln!(
            summary,
            "{i:>4}  {:>8}  {:>5}  {:>5}  {:>6}  {d}",
            s.distinct,
            s.total.to_string(),
            s.pivot,
            s.pivot_weight.to_string()
        );
    }
    let exit_code = match &trace.end {
        TraceEnd::BaseCase => {
            let _ = writeln!(summary, "terminated at depth {}; every step certified", trace.depth());
            0
        }
        TraceEnd::Truncated(r) => {
            let _ = writeln!(summary, "truncated at depth {}: {r}", trace.depth());
            4
        }
    };
    let cert = serde_json::to_value(trace.to_doc()).expect("trace serializes");
    Ok(Outputs { sidecar: cfg, report: csv, certificate: cert, summary, exit_code })
}

// ---------------------------------------------------------------------------

fn systems_for(opts: &AverageOptions, factors: usize) -> Result<Vec<NilSystem>, CliError> {
    let built = opts.systems.iter().map(|s| s.build()).collect::<Result<Vec<_>, _>>()?;
    match built.len() {
        1 => Ok(vec![built[0].clone(); factors]),
        n if n == factors => Ok(built),
        n => Err(CliError::Config(format!("expected 1 or {factors} systems, got {n}"))),
    }
}

/// Builds member `i` in the algebra acting on `sys`, after checking it
/// against the configured algebra if there is one.
fn member_in(cfg: &ExperimentConfig, i: usize, sys: &NilSystem) -> Result<PolyMap, CliError> {
    let alg = sys.acting_algebra();
    if let Some(a) = cfg.resolve_algebra()? {
        if !a.same_as(alg) {
            return Err(CliError::Config(format!("family algebra does not act on system for member {i}")));
        }
    }
    let mut one = cfg.clone();
    one.family = vec![cfg.family[i].clone()];
    Ok(one.family_in(alg)?.remove(0))
}

fn element(alg: &Arc<nilflow::LieAlgebra>, coords: &[Rational]) -> Result<GroupElement, CliError> {
    Ok(GroupElement::new(alg.clone(), coords.to_vec())?)
}

/// Varieties on which some function is invariant under its flow.
fn invariance_varieties(
    systems: &[NilSystem],
    maps: &[PolyMap],
    fns: &[nilflow::TestFunction],
) -> Result<Vec<(usize, Variety)>, CliError> {
    let mut out = Vec::new();
    for (i, (m, (s, f))) in maps.iter().zip(systems.iter().zip(fns)).enumerate() {
        if let Some(l) = character_functional(s, f) {
            let v = vanishing_variety(m, &l)?;
            if v.is_proper() {
                out.push((i, v));
            }
        }
    }
    Ok(out)
}

fn variety_doc(v: &Variety) -> Value {
    json!({"vars": v.vars().to_vec(), "generators": strings(v.generators())})
}

fn estimates_doc(r: &AverageReport) -> Value {
    let rows: Vec<Value> = r
        .grid
        .iter()
        .zip(&r.estimates)
        .zip(&r.std_errors)
        .map(|((t, e), se)| json!({"T": format_rational(t), "estimate": e, "std_error": se}))
        .collect();
    json!({"rows": rows, "cauchy_gap": r.cauchy_gap, "cauchy_tail": r.cauchy_tail})
}

fn average(cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    let opts = cfg.average.clone().ok_or_else(|| CliError::Config("\"average\" section is required".into()))?;
    match opts.mode {
        AverageMode::Joining => average_joining(cfg, opts),
        AverageMode::MeanErgodic => average_mean_ergodic(cfg, opts),
    }
}

fn average_joining(cfg: ExperimentConfig, opts: AverageOptions) -> Result<Outputs, CliError> {
    let k = cfg.family.len();
    if k == 0 {
        return Err(CliError::Config("average needs a nonempty family".into()));
    }
    let systems = systems_for(&opts, k + 1)?;
    let maps = (0..k).map(|i| member_in(&cfg, i, &systems[i + 1])).collect::<Result<Vec<_>, _>>()?;
    if opts.functions.len() != k + 1 {
        return Err(CliError::Config(format!("expected {} functions, got {}", k + 1, opts.functions.len())));
    }
    let settings = Settings::new(opts.dt.clone(), opts.n_samples, cfg.seed);

    let mut sample_doc = Value::Null;
    let h = match &cfg.h {
        ParamChoice::Empty => Vec::new(),
        ParamChoice::Point(p) => p.clone(),
        ParamChoice::Generic => {
            let vars = maps[0].param_vars();
            let vs = invariance_varieties(&systems[1..], &maps, &opts.functions[1..])?;
            let meagre = MeagreSet::from_varieties(vars.clone(), vs.iter().map(|(_, v)| v.clone()).collect())?;
            let s = generic_sample(&meagre, cfg.seed, opts.max_attempts)?;
            sample_doc = json!({
                "varieties": vs.iter().map(|(i, v)| json!({"member": i, "variety": variety_doc(v)})).collect::<Vec<_>>(),
                "sample": serde_json::to_value(s.to_doc(&vars)).expect("sample serializes"),
            });
            s.point
        }
    };

    let kind = match &opts.joining {
        JoiningDoc::Kind(s) if s == "diagonal" => JoiningKind::Diagonal,
        JoiningDoc::Kind(s) if s == "product" => JoiningKind::Product,
        JoiningDoc::Kind(s) => return Err(CliError::Config(format!("unknown joining kind `{s}`"))),
        JoiningDoc::Graph { graph } => JoiningKind::Graph(
            graph
                .iter()
                .zip(&systems)
                .map(|(g, s)| element(s.acting_algebra(), &g.0))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let joining = JoiningSpec::new(systems.clone(), kind)?;

    let mut tuples = Vec::with_capacity(opts.invariance.len());
    for t in &opts.invariance {
        tuples.push(match t {
            TupleDoc::Diagonal(g) => {
                if systems.iter().all(|s| s == &systems[0]) {
                    diagonal_tuple(&element(systems[0].acting_algebra(), &g.0)?, k + 1)
                } else {
                    systems.iter().map(|s| element(s.acting_algebra(), &g.0)).collect::<Result<Vec<_>, _>>()?
                }
            }
            TupleDoc::Offdiagonal(ts) => offdiagonal_tuple(&joining, &maps, ts, &h)?,
            TupleDoc::Elements(gs) => {
                if gs.len() != k + 1 {
                    return Err(CliError::Config(format!("tuple needs {} elements, got {}", k + 1, gs.len())));
                }
                gs.iter().zip(&systems).map(|(g, s)| element(s.acting_algebra(), &g.0)).collect::<Result<Vec<_>, _>>()?
            }
        });
    }

    let (report, invariance) = if tuples.is_empty() {
        (convergence_scan(&joining, &maps, &h, &opts.functions, &opts.t_grid, &settings)?, Vec::new())
    } else {
        let inv = invariance_scan(&joining, &maps, &h, &opts.functions, &opts.t_grid, &tuples, &settings)?;
        let docs: Vec<Value> = opts
            .invariance
            .iter()
            .zip(&inv.deviations)
            .map(|(t, devs)| {
                json!({
                    "tuple": t.label(),
                    "deviation": devs.iter().map(|d| d.value).collect::<Vec<_>>(),
                    "std_error": devs.iter().map(|d| d.std_error).collect::<Vec<_>>(),
                })
            })
            .collect();
        (inv.convergence(&settings), docs)
    };

    let mut summary = String::from("T  estimate  std_error\n");
    for ((t, e), se) in report.grid.iter().zip(&report.estimates).zip(&report.std_errors) {
        let _ = writeln!(summary, "{}  {e:.6}  {se:.6}", format_rational(t));
    }
    let _ = writeln!(summary, "cauchy_gap {:.6} over the last {} horizons", report.cauchy_gap, report.cauchy_tail);
    for doc in &invariance {
        let _ = writeln!(summary, "{}: {}", doc["tuple"].as_str().unwrap_or(""), doc["deviation"]);
    }
    let cert = json!({
        "mode": "joining",
        "h": rationals(&h),
        "generic": sample_doc,
        "T": rationals(&report.grid),
        "convergence": estimates_doc(&report),
        "invariance": invariance,
    });
    Ok(done(cfg, report.to_csv(), cert, summary))
}

fn mean_ergodic_doc(label: &str, r: &MeanErgodicReport, settings: &Settings) -> Value {
    let norms = AverageReport::from_estimates(&r.grid, &r.norms, settings);
    json!({
        "label": label,
        "h": rationals(&r.h),
        "prediction": r.prediction,
        "norms": estimates_doc(&norms),
        "distances": r.distances.iter().map(|d| json!({"value": d.value, "std_error": d.std_error})).collect::<Vec<_>>(),
    })
}

fn mean_ergodic_rows(csv: &mut String, r: &MeanErgodicReport, settings: &Settings) {
    let norms = AverageReport::from_estimates(&r.grid, &r.norms, settings);
    let h = rationals(&r.h).join(" ");
    for ((t, n), d) in r.grid.iter().zip(&r.norms).zip(&r.distances) {
        let Estimate { value, std_error } = *n;
        let _ = writeln!(
            csv,
            "{},{value},{std_error},{},{h},{},{}",
            format_rational(t),
            norms.cauchy_gap,
            d.value,
            d.std_error
        );
    }
}

fn average_mean_ergodic(cfg: ExperimentConfig, opts: AverageOptions) -> Result<Outputs, CliError> {
    if cfg.family.len() != 1 || opts.functions.len() != 1 || opts.systems.len() != 1 {
        return Err(CliError::Config("mean_ergodic mode takes one map, one system and one function".into()));
    }
    let sys = opts.systems[0].build()?;
    let phi = member_in(&cfg, 0, &sys)?;
    let f = &opts.functions[0];
    let settings = Settings::new(opts.dt.clone(), opts.n_samples, cfg.seed);
    let exceptional: Vec<Vec<Rational>> = opts.exceptional.iter().map(|p| p.0.clone()).collect();

    let mut runs: Vec<(String, MeanErgodicReport)> = Vec::new();
    let mut extra = json!(null);
    match &cfg.h {
        ParamChoice::Generic => {
            let d = dichotomy(&sys, &phi, f, &exceptional, &opts.t_grid, &settings, cfg.seed, opts.max_attempts)?;
            extra = json!({
                "variety": d.variety.as_ref().map(variety_doc),
                "sample": serde_json::to_value(d.sample.to_doc(&phi.param_vars())).expect("sample serializes"),
            });
            runs.push(("generic".into(), d.generic));
            runs.extend(d.exceptional.into_iter().map(|r| ("exceptional".into(), r)));
        }
        choice => {
            let h = match choice {
                ParamChoice::Point(p) => p.clone(),
                _ => Vec::new(),
            };
            runs.push(("configured".into(), mean_ergodic_base(&sys, &phi, &h, f, &opts.t_grid, &settings)?));
            for e in &exceptional {
                runs.push(("exceptional".into(), mean_ergodic_base(&sys, &phi, e, f, &opts.t_grid, &settings)?));
            }
        }
    }

    let mut csv = String::from("T,estimate,std_error,cauchy_gap,h,distance,distance_se\n");
    let mut summary = String::from("h  T  norm  std_error  predicted\n");
    for (label, r) in &runs {
        mean_ergodic_rows(&mut csv, r, &settings);
        let pred = r.prediction.as_ref().map_or("-".to_string(), |p| format!("{:.4}", p.limit_norm));
        let last = r.norms.len() - 1;
        let _ = writeln!(
            summary,
            "{label} [{}]  {}  {:.6}  {:.6}  {pred}",
            rationals(&r.h).join(" "),
            format_rational(&r.grid[last]),
            r.norms[last].value,
            r.norms[last].std_error
        );
    }
    let cert = json!({
        "mode": "mean_ergodic",
        "generic": extra,
        "runs": runs.iter().map(|(l, r)| mean_ergodic_doc(l, r, &settings)).collect::<Vec<_>>(),
    });
    Ok(done(cfg, csv, cert, summary))
}

// ---------------------------------------------------------------------------

fn generic(mut cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    let opts = cfg.generic.get_or_insert_with(Default::default).clone();
    let maps = cfg.family()?;
    let vars = match maps.first() {
        Some(m) => m.param_vars(),
        None => nilflow::poly::vars_from(&cfg.vars[1.min(cfg.vars.len())..]),
    };
    let mut varieties = Vec::new();
    let mut sources = Vec::new();
    for (li, l) in opts.functionals.iter().enumerate() {
        for (mi, m) in maps.iter().enumerate() {
            varieties.push(vanishing_variety(m, &l.0)?);
            sources.push(format!("member {mi}, functional {li}"));
        }
    }
    for (ci, gens) in opts.constraints.iter().enumerate() {
        let gs = gens
            .iter()
            .map(|g| MultiPoly::parse(vars.clone(), g))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Core(e.into()))?;
        varieties.push(Variety::new(vars.clone(), gs)?);
        sources.push(format!("constraint {ci}"));
    }
    let meagre = MeagreSet::from_varieties(vars.clone(), varieties.clone())?;
    let sample = generic_sample(&meagre, cfg.seed, opts.max_attempts)?;

    let mut csv = String::from("var,value\n");
    let mut summary = String::new();
    for (v, x) in vars.iter().zip(&sample.point) {
        let _ = writeln!(csv, "{v},{}", format_rational(x));
        let _ = writeln!(summary, "{v} = {}", format_rational(x));
    }
    for (vi, gi, val) in &sample.witnesses {
        let _ = writeln!(
            summary,
            "{}: generator {gi} = {} at the sample ({})",
            sources[*vi],
            varieties[*vi].generators()[*gi],
            format_rational(val)
        );
    }
    let _ = writeln!(summary, "{} attempt(s), box half-width {}", sample.attempts, sample.box_size);
    let cert = json!({
        "varieties": varieties
            .iter()
            .zip(&sources)
            .map(|(v, s)| json!({"source": s, "variety": variety_doc(v)}))
            .collect::<Vec<_>>(),
        "sample": serde_json::to_value(sample.to_doc(&vars)).expect("sample serializes"),
        "off_every_variety": true,
    });
    Ok(done(cfg, csv, cert, summary))
}

// ---------------------------------------------------------------------------

fn vdc(cfg: ExperimentConfig) -> Result<Outputs, CliError> {
    let opts = cfg.vdc.clone().ok_or_else(|| CliError::Config("\"vdc\" section is required".into()))?;
    if cfg.family.len() != 1 {
        return Err(CliError::Config("vdc needs a family with exactly one map".into()));
    }
    let sys = opts.system.build()?;
    let phi = member_in(&cfg, 0, &sys)?;
    let h = match &cfg.h {
        ParamChoice::Empty => Vec::new(),
        ParamChoice::Point(p) => p.clone(),
        ParamChoice::Generic => return Err(CliError::Config("vdc needs an explicit h".into())),
    };
    let x: Vec<f64> = point_or_origin(&opts.point, sys.point_dim()).iter().map(to_f64).collect();
    let steps = (&opts.s + &opts.t) / &opts.step;
    if !steps.is_integer() || opts.step <= Rational::from_integer(0.into()) {
        return Err(CliError::Config("S + T must be a positive multiple of the step".into()));
    }
    let len = steps.to_integer().try_into().map_err(|_| CliError::Config("too many steps".into()))?;
    let a = trajectory(&sys, &phi, &h, &opts.function, &x, &opts.step, len)?;
    let r = vdc_check(&a, to_f64(&opts.step), to_f64(&opts.s), to_f64(&opts.t))?;
    let csv = format!("lhs,rhs\n{},{}\n", r.lhs, r.rhs);
    let summary = format!("lhs {:.6}  rhs {:.6}  lhs/sqrt(rhs) {:.4}\n", r.lhs, r.rhs, r.ratio());
    let cert = json!({
        "lhs": r.lhs,
        "rhs": r.rhs,
        "ratio": r.ratio(),
        "S": format_rational(&opts.s),
        "T": format_rational(&opts.t),
        "step": format_rational(&opts.step),
        "samples": a.len(),
    });
    Ok(done(cfg, csv, cert, summary))
}
