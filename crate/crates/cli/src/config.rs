//! The single JSON document that drives a run.
//!
//! Every optional field has a default that is written back out in
//! `sidecar.json`, so a sidecar is itself a valid config for the same run.

use std::sync::Arc;

use nilflow::dynamics::SystemDoc;
use nilflow::polymap::{AlgebraRef, CoordDoc, PolyMapDoc};
use nilflow::rational::{format_rational, int, ratio, serde_str, serde_vec, Rational};
use nilflow::{LieAlgebra, PolyMap, TestFunction, TraceLimits};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Filled in by the run; a config naming a different command is rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraRef>,
    #[serde(default = "default_vars")]
    pub vars: Vec<String>,
    /// One coordinate list per member.
    #[serde(default)]
    pub family: Vec<Vec<CoordDoc>>,
    #[serde(default)]
    pub h: ParamChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pet: Option<PetOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average: Option<AverageOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<GenericOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdc: Option<VdcOptions>,
}

fn default_vars() -> Vec<String> {
    vec!["t".into()]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn resolve_algebra(&self) -> Result<Option<Arc<LieAlgebra>>, CliError> {
        self.algebra.as_ref().map(|a| a.resolve().map(Arc::new)).transpose().map_err(CliError::from)
    }

    /// Builds the family inside `algebra`. A member that fails to parse or
    /// does not vanish at `t = 0` is reported with its index.
    pub fn family_in(&self, algebra: &Arc<LieAlgebra>) -> Result<Vec<PolyMap>, CliError> {
        self.family
            .iter()
            .enumerate()
            .map(|(i, coords)| {
                let doc = PolyMapDoc { algebra: AlgebraRef::of(algebra), vars: self.vars.clone(), coords: coords.clone() };
                let map = doc.to_map_in(algebra.clone()).map_err(|e| CliError::Member(i, e))?;
                map.check_normalized().map_err(|e| CliError::Member(i, e))?;
                Ok(map)
            })
            .collect()
    }

    /// The family in the configured algebra, each member checked for
    /// `φ(0, ·) ≡ e`; an empty family needs none.
    pub fn family(&self) -> Result<Vec<PolyMap>, CliError> {
        if self.family.is_empty() {
            return Ok(Vec::new());
        }
        let alg = self.resolve_algebra()?.ok_or_else(|| CliError::Config("\"algebra\" is required".into()))?;
        self.family_in(&alg)
    }
}

/// Either an explicit parameter point or `"generic"`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ParamChoice {
    #[default]
    Empty,
    Point(Vec<Rational>),
    Generic,
}

impl Serialize for ParamChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamChoice::Empty => serde_vec::serialize(&[], s),
            ParamChoice::Point(p) => serde_vec::serialize(p, s),
            ParamChoice::Generic => s.serialize_str("generic"),
        }
    }
}

impl<'de> Deserialize<'de> for ParamChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "generic" => Ok(ParamChoice::Generic),
            other => {
                let p = serde_vec::deserialize(other).map_err(serde::de::Error::custom)?;
                Ok(if p.is_empty() { ParamChoice::Empty } else { ParamChoice::Point(p) })
            }
        }
    }
}

/// A list of rationals, written as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatVec(#[serde(with = "serde_vec")] pub Vec<Rational>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetOptions {
    #[serde(default = "PetOptions::default_depth")]
    pub max_depth: usize,
    #[serde(default = "PetOptions::default_members")]
    pub max_members: usize,
    #[serde(default = "PetOptions::default_cap")]
    pub matching_cap: usize,
}

impl PetOptions {
    fn default_depth() -> usize {
        TraceLimits::default().max_depth
    }
    fn default_members() -> usize {
        TraceLimits::default().max_members
    }
    fn default_cap() -> usize {
        TraceLimits::default().matching_cap
    }

    pub fn limits(&self) -> TraceLimits {
        TraceLimits {
            max_depth: self.max_depth,
            max_members: self.max_members,
            matching_cap: self.matching_cap,
            keep_families: true,
        }
    }
}

impl Default for PetOptions {
    fn default() -> Self {
        Self { max_depth: Self::default_depth(), max_members: Self::default_members(), matching_cap: Self::default_cap() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    /// `∫ f₀ ⊗ ⋯ ⊗ f_k dλ_T` over a joining.
    #[default]
    Joining,
    /// `‖⨍₀^T f∘u^{φ(t,h)} dt‖₂` for a single map.
    MeanErgodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JoiningDoc {
    /// `"diagonal"` or `"product"`.
    Kind(String),
    /// Group elements (exponential coordinates) pushing the diagonal.
    Graph { graph: Vec<RatVec> },
}

impl Default for JoiningDoc {
    fn default() -> Self {
        JoiningDoc::Kind("diagonal".into())
    }
}

/// A translation tuple for the invariance check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TupleDoc {
    /// `(g, …, g)` for `g` in exponential coordinates.
    Diagonal(RatVec),
    /// `(e, φ₁(t*, h), …, φ_k(t*, h))`.
    Offdiagonal(#[serde(with = "serde_str")] Rational),
    /// An explicit tuple.
    Elements(Vec<RatVec>),
}

impl TupleDoc {
    pub fn label(&self) -> String {
        let join = |v: &RatVec| v.0.iter().map(format_rational).collect::<Vec<_>>().join(" ");
        match self {
            TupleDoc::Diagonal(g) => format!("diagonal({})", join(g)),
            TupleDoc::Offdiagonal(t) => format!("offdiagonal({})", format_rational(t)),
            TupleDoc::Elements(gs) => {
                format!("elements({})", gs.iter().map(join).collect::<Vec<_>>().join("; "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageOptions {
    #[serde(default)]
    pub mode: AverageMode,
    /// `k + 1` systems, or a single system used for every factor.
    pub systems: Vec<SystemDoc>,
    #[serde(default)]
    pub joining: JoiningDoc,
    pub functions: Vec<TestFunction>,
    #[serde(rename = "T_grid", with = "serde_vec")]
    pub t_grid: Vec<Rational>,
    #[serde(with = "serde_str", default = "default_dt")]
    pub dt: Rational,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub invariance: Vec<TupleDoc>,
    /// Extra parameter points for the mean-ergodic mode.
    #[serde(default)]
    pub exceptional: Vec<RatVec>,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

pub fn default_dt() -> Rational {
    ratio(1, 20)
}

fn default_samples() -> usize {
    10_000
}

fn default_attempts() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericOptions {
    /// Linear functionals on the algebra; each pairs with every member.
    #[serde(default)]
    pub functionals: Vec<RatVec>,
    /// Extra varieties, each a list of generators over the parameters.
    #[serde(default)]
    pub constraints: Vec<Vec<String>>,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

impl Default for GenericOptions {
    fn default() -> Self {
        Self { functionals: Vec::new(), constraints: Vec::new(), max_attempts: default_attempts() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdcOptions {
    pub system: SystemDoc,
    pub function: TestFunction,
    /// Starting point in fundamental-domain coordinates; the origin if empty.
    #[serde(default = "empty_point")]
    pub point: RatVec,
    #[serde(with = "serde_str", default = "default_step")]
    pub step: Rational,
    #[serde(rename = "S", with = "serde_str")]
    pub s: Rational,
    #[serde(rename = "T", with = "serde_str")]
    pub t: Rational,
}

fn empty_point() -> RatVec {
    RatVec(Vec::new())
}

fn default_step() -> Rational {
    ratio(1, 100)
}

/// Zero-padded point of the given dimension.
pub fn point_or_origin(p: &RatVec, dim: usize) -> Vec<Rational> {
    if p.0.is_empty() {
        vec![int(0); dim]
    } else {
        p.0.clone()
    }
}
