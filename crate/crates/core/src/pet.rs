//! Weights, leading-term classes and the PET ordering on families of
//! polynomial maps, together with derived families and a checked induction
//! trace.
//!
//! Families are stored as multisets: equal maps are merged and carry an exact
//! multiplicity. Class cardinalities, the ordering and the stopping rule all
//! count multiplicity, so a family behaves exactly like the tuple obtained by
//! listing every map as many times as it occurs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::poly::{MultiPoly, Vars};
use crate::polymap::{fresh_name, LeadingTerm, PolyMap, PolyMapDoc};

/// Default cap on the number of classes of one weight handed to the
/// exhaustive matching search.
pub const DEFAULT_MATCHING_CAP: usize = 12;

/// `(cl φ, ldeg φ)`. The `Ord` impl is the well-order `≺`: a larger class
/// comes first, then a smaller degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    pub class: u32,
    pub degree: u32,
}

impl Weight {
    pub fn new(class: u32, degree: u32) -> Self {
        Self { class, degree }
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        other.class.cmp(&self.class).then(self.degree.cmp(&other.degree))
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.class, self.degree)
    }
}

/// `w₁ ≺ w₂`.
pub fn weight_less(a: Weight, b: Weight) -> bool {
    a < b
}

pub fn weight(phi: &PolyMap) -> Result<Weight> {
    let lt = phi.leading_term()?;
    Ok(Weight::new(lt.class, lt.degree))
}

/// `φ ∼_LT ψ`. Maps over different variable lists are compared after
/// aligning both to the longer list.
pub fn lt_equivalent(phi: &PolyMap, psi: &PolyMap) -> Result<bool> {
    let (a, b) = if phi.vars() == psi.vars() {
        (phi.clone(), psi.clone())
    } else if phi.vars().len() >= psi.vars().len() {
        (phi.clone(), psi.align_to(phi.vars())?)
    } else {
        (phi.align_to(psi.vars())?, psi.clone())
    };
    Ok(a.leading_term()? == b.leading_term()?)
}

/// Number of `∼_LT` classes at each weight.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightAssignment(BTreeMap<Weight, usize>);

impl WeightAssignment {
    pub fn get(&self, w: Weight) -> usize {
        self.0.get(&w).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weights with their counts, `≺`-largest first.
    pub fn iter(&self) -> impl Iterator<Item = (Weight, usize)> + '_ {
        self.0.iter().rev().map(|(w, c)| (*w, *c))
    }

    /// `[[c, d, count], …]`, `≺`-largest weight first.
    pub fn to_triples(&self) -> Vec<[u64; 3]> {
        self.iter().map(|(w, c)| [w.class as u64, w.degree as u64, c as u64]).collect()
    }

    /// The weight witnessing `self ≺ other`, if it precedes: scanning from
    /// the `≺`-largest weight down, the first weight where the counts differ
    /// must have the smaller count on `self`.
    pub fn precedes(&self, other: &Self) -> Option<Weight> {
        let mut weights: Vec<Weight> = self.0.keys().chain(other.0.keys()).copied().collect();
        weights.sort_unstable();
        weights.dedup();
        for w in weights.into_iter().rev() {
            match self.get(w).cmp(&other.get(w)) {
                Ordering::Equal => continue,
                Ordering::Less => return Some(w),
                Ordering::Greater => return None,
            }
        }
        None
    }
}

impl FromIterator<(Weight, usize)> for WeightAssignment {
    fn from_iter<I: IntoIterator<Item = (Weight, usize)>>(iter: I) -> Self {
        let mut m = BTreeMap::new();
        for (w, c) in iter {
            if c > 0 {
                *m.entry(w).or_insert(0) += c;
            }
        }
        Self(m)
    }
}

/// One `∼_LT` class: its leading term, the distinct members in it and its
/// cardinality counted with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtClass {
    pub term: LeadingTerm,
    pub members: Vec<usize>,
    pub size: BigUint,
}

impl LtClass {
    pub fn weight(&self) -> Weight {
        Weight::new(self.term.class, self.term.degree)
    }
}

/// A finite family of polynomial maps with a shared algebra and variable
/// list, stored as distinct maps with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFamily {
    algebra: Arc<LieAlgebra>,
    vars: Vars,
    members: Vec<(PolyMap, BigUint)>,
}

impl PolyFamily {
    pub fn empty(algebra: Arc<LieAlgebra>, vars: Vars) -> Self {
        Self { algebra, vars, members: Vec::new() }
    }

    /// Builds a family from a tuple of maps, merging repeats. Every map must
    /// satisfy `φ(0,·) ≡ e`.
    pub fn new(maps: Vec<PolyMap>) -> Result<Self> {
        let first = maps.first().ok_or(Error::AllConstant)?;
        let mut fam = Self::empty(first.algebra().clone(), first.vars().clone());
        for m in maps {
            fam.push(m, BigUint::one())?;
        }
        Ok(fam)
    }

    /// Adds `count` copies of `map`.
    pub fn push(&mut self, map: PolyMap, count: BigUint) -> Result<()> {
        if !map.algebra().same_as(&self.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        if map.vars() != &self.vars {
            return Err(Error::VariableMismatch(self.vars.to_vec(), map.vars().to_vec()));
        }
        map.check_normalized()?;
        if count.is_zero() {
            return Ok(());
        }
        match self.members.iter_mut().find(|(m, _)| *m == map) {
            Some((_, c)) => *c += count,
            None => self.members.push((map, count)),
        }
        Ok(())
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn members(&self) -> &[(PolyMap, BigUint)] {
        &self.members
    }

    pub fn distinct(&self) -> usize {
        self.members.len()
    }

    /// Number of members counted with multiplicity.
    pub fn total(&self) -> BigUint {
        self.members.iter().map(|(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The family as a plain tuple. Only sensible for small multiplicities.
    pub fn to_tuple(&self) -> Vec<PolyMap> {
        let mut out = Vec::new();
        for (m, c) in &self.members {
            let mut k = BigUint::zero();
            while &k < c {
                out.push(m.clone());
                k += 1u32;
            }
        }
        out
    }

    /// Removes one copy of distinct member `i`.
    pub fn without_one(&self, i: usize) -> Result<Self> {
        if i >= self.members.len() {
            return Err(Error::InvalidIndex { index: i, len: self.members.len() });
        }
        let mut out = self.clone();
        out.members[i].1 -= 1u32;
        if out.members[i].1.is_zero() {
            out.members.remove(i);
        }
        Ok(out)
    }

    /// Splits off the constant-identity members, returning how many copies
    /// were dropped.
    pub fn drop_constants(&self) -> (Self, BigUint) {
        let mut dropped = BigUint::zero();
        let mut kept = Vec::with_capacity(self.members.len());
        for (m, c) in &self.members {
            if m.is_identity() {
                dropped += c;
            } else {
                kept.push((m.clone(), c.clone()));
            }
        }
        (Self { algebra: self.algebra.clone(), vars: self.vars.clone(), members: kept }, dropped)
    }

    /// `∼_LT` classes of the nonconstant members, in order of first
    /// appearance.
    pub fn classes(&self) -> Result<Vec<LtClass>> {
        let mut index: HashMap<LeadingTerm, usize> = HashMap::new();
        let mut out: Vec<LtClass> = Vec::new();
        for (i, (m, c)) in self.members.iter().enumerate() {
            if m.is_identity() {
                continue;
            }
            let term = m.leading_term()?;
            match index.get(&term) {
                Some(&k) => {
                    out[k].members.push(i);
                    out[k].size += c;
                }
                None => {
                    index.insert(term.clone(), out.len());
                    out.push(LtClass { term, members: vec![i], size: c.clone() });
                }
            }
        }
        Ok(out)
    }

    pub fn weight_assignment(&self) -> Result<WeightAssignment> {
        Ok(assignment_of(&self.classes()?))
    }

    pub fn to_docs(&self) -> Vec<MemberDoc> {
        self.members
            .iter()
            .map(|(m, c)| MemberDoc { map: m.to_doc(), multiplicity: c.to_string() })
            .collect()
    }
}

fn assignment_of(classes: &[LtClass]) -> WeightAssignment {
    classes.iter().map(|c| (c.weight(), 1)).collect()
}

pub fn weight_assignment(f: &PolyFamily) -> Result<WeightAssignment> {
    f.weight_assignment()
}

/// Why one family precedes another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descent {
    /// The weight assignment drops, first at this weight.
    Weight(Weight),
    /// Equal assignments; under a weight-preserving matching no class grows
    /// and some class at this weight shrinks.
    ClassSize(Weight),
}

impl Descent {
    pub fn weight(&self) -> Weight {
        match self {
            Descent::Weight(w) | Descent::ClassSize(w) => *w,
        }
    }
}

/// `F ≺_PET G`.
pub fn family_precedes(f: &PolyFamily, g: &PolyFamily) -> Result<bool> {
    Ok(family_descent(f, g, DEFAULT_MATCHING_CAP)?.is_some())
}

/// `F ≺_PET G` with its witness, or `None`. The matching clause is decided
/// by exhaustive search over weight-preserving bijections; more than `cap`
/// classes at a single weight is an error.
pub fn family_descent(f: &PolyFamily, g: &PolyFamily, cap: usize) -> Result<Option<Descent>> {
    let fc = f.classes()?;
    let gc = g.classes()?;
    classes_descent(&fc, &gc, cap)
}

fn classes_descent(fc: &[LtClass], gc: &[LtClass], cap: usize) -> Result<Option<Descent>> {
    let fa = assignment_of(fc);
    let ga = assignment_of(gc);
    if let Some(w) = fa.precedes(&ga) {
        return Ok(Some(Descent::Weight(w)));
    }
    if fa != ga {
        return Ok(None);
    }
    let mut strict = None;
    for (w, n) in fa.iter() {
        if n > cap {
            return Err(Error::FamilyTooLarge { classes: n, cap });
        }
        let a: Vec<&BigUint> = fc.iter().filter(|c| c.weight() == w).map(|c| &c.size).collect();
        let b: Vec<&BigUint> = gc.iter().filter(|c| c.weight() == w).map(|c| &c.size).collect();
        let Some(matching) = dominated_matching(&a, &b) else {
            return Ok(None);
        };
        if strict.is_none() && matching.iter().enumerate().any(|(i, &j)| a[i] < b[j]) {
            strict = Some(w);
        }
    }
    Ok(strict.map(Descent::ClassSize))
}

/// A bijection `σ` with `a[i] ≤ b[σ(i)]` for all `i`, found by backtracking.
pub fn dominated_matching<T: Ord>(a: &[T], b: &[T]) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    fn go<T: Ord>(i: usize, a: &[T], b: &[T], used: &mut [bool], sigma: &mut Vec<usize>) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if used[j] || a[i] > b[j] {
                continue;
            }
            used[j] = true;
            sigma.push(j);
            if go(i + 1, a, b, used, sigma) {
                return true;
            }
            sigma.pop();
            used[j] = false;
        }
        false
    }
    let mut used = vec![false; b.len()];
    let mut sigma = Vec::with_capacity(a.len());
    go(0, a, b, &mut used, &mut sigma).then_some(sigma)
}

/// Index of the first distinct member with `≺`-minimal weight.
pub fn pivot(f: &PolyFamily) -> Result<usize> {
    let mut best: Option<(Weight, usize)> = None;
    for (i, (m, _)) in f.members.iter().enumerate() {
        if m.is_identity() {
            continue;
        }
        let w = weight(m)?;
        if best.is_none_or(|(bw, _)| w < bw) {
            best = Some((w, i));
        }
    }
    best.map(|(_, i)| i).ok_or(Error::AllConstant)
}

/// The `i`-th derived family over the variables `(t, h…, k)`:
/// `φ_j φ_i^{-1}` for `j ≠ i` and `φ_j(k)^{-1} φ_j(t+k) φ_i^{-1}` for all `j`.
/// Multiplicities carry over, and the `m_i − 1` further copies of `φ_i`
/// contribute constant-identity members of the first kind.
pub fn derived_family(f: &PolyFamily, i: usize) -> Result<PolyFamily> {
    if i >= f.members.len() {
        return Err(Error::InvalidIndex { index: i, len: f.members.len() });
    }
    let k_name = fresh_name(&f.vars, "k");
    let mut names = f.vars.to_vec();
    names.push(k_name.clone());
    let vars: Vars = names.into();
    let t_name = f.vars[0].clone();
    let t = MultiPoly::var(vars.clone(), 0);
    let k = MultiPoly::var(vars.clone(), vars.len() - 1);
    let shift = BTreeMap::from([(t_name.clone(), &t + &k)]);
    let at_k = BTreeMap::from([(t_name, k)]);

    let pivot_inv = f.members[i].0.align_to(&vars)?.inverse();
    let mut out = Builder::new(f.algebra.clone(), vars.clone());
    let mut second = Vec::with_capacity(f.members.len());
    for (j, (phi, c)) in f.members.iter().enumerate() {
        let here = phi.align_to(&vars)?;
        if j == i {
            let extra = c - 1u32;
            if !extra.is_zero() {
                out.add(PolyMap::identity(f.algebra.clone(), vars.clone()), extra);
            }
        } else {
            out.add(here.product(&pivot_inv)?, c.clone());
        }
        let moved = phi.substitute(&vars, &shift)?;
        let base = phi.substitute(&vars, &at_k)?;
        second.push((base.inverse().product(&moved)?.product(&pivot_inv)?, c.clone()));
    }
    for (m, c) in second {
        out.add(m, c);
    }
    Ok(out.finish())
}

struct Builder {
    fam: PolyFamily,
    index: HashMap<Vec<MultiPoly>, usize>,
}

impl Builder {
    fn new(algebra: Arc<LieAlgebra>, vars: Vars) -> Self {
        Self { fam: PolyFamily::empty(algebra, vars), index: HashMap::new() }
    }

    fn add(&mut self, map: PolyMap, count: BigUint) {
        debug_assert!(map.check_normalized().is_ok());
        match self.index.get(map.coords()) {
            Some(&k) => self.fam.members[k].1 += count,
            None => {
                self.index.insert(map.coords().to_vec(), self.fam.members.len());
                self.fam.members.push((map, count));
            }
        }
    }

    fn finish(self) -> PolyFamily {
        self.fam
    }
}

/// Resource limits for [`pet_trace_with`].
#[derive(Clone, Debug)]
pub struct TraceLimits {
    pub max_depth: usize,
    /// Largest number of distinct maps a derived family may have.
    pub max_members: usize,
    pub matching_cap: usize,
    /// Keep every derived family in the trace (needed for the full JSON
    /// certificate).
    pub keep_families: bool,
}

impl Default for TraceLimits {
    fn default() -> Self {
        Self { max_depth: 64, max_members: 4096, matching_cap: DEFAULT_MATCHING_CAP, keep_families: true }
    }
}

/// One derivation step.
#[derive(Clone, Debug)]
pub struct PetStep {
    /// Constant-identity copies removed before this step.
    pub dropped: BigUint,
    pub distinct: usize,
    pub total: BigUint,
    pub classes: Vec<(Weight, BigUint)>,
    pub assignment: WeightAssignment,
    pub pivot: usize,
    pub pivot_weight: Weight,
    pub descent: Descent,
    pub derived: Option<PolyFamily>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    /// At most one member remains.
    BaseCase,
    Truncated(String),
}

#[derive(Clone, Debug)]
pub struct PetTrace {
    pub steps: Vec<PetStep>,
    pub end: TraceEnd,
    /// Size of the last family after dropping constants.
    pub final_total: BigUint,
    pub final_distinct: usize,
    pub final_dropped: BigUint,
}

impl PetTrace {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn terminated(&self) -> bool {
        self.end == TraceEnd::BaseCase
    }

    pub fn to_doc(&self) -> TraceDoc {
        TraceDoc {
            terminated: self.terminated(),
            truncation: match &self.end {
                TraceEnd::BaseCase => None,
                TraceEnd::Truncated(r) => Some(r.clone()),
            },
            depth: self.depth(),
            final_total: self.final_total.to_string(),
            final_distinct: self.final_distinct,
            final_dropped: self.final_dropped.to_string(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDoc {
                    dropped: s.dropped.to_string(),
                    distinct: s.distinct,
                    total: s.total.to_string(),
                    assignment: s.assignment.to_triples(),
                    class_sizes: s
                        .classes
                        .iter()
                        .map(|(w, n)| (w.class, w.degree, n.to_string()))
                        .collect(),
                    pivot: s.pivot,
                    pivot_weight: [s.pivot_weight.class, s.pivot_weight.degree],
                    descent: s.descent,
                    derived: s.derived.as_ref().map(PolyFamily::to_docs),
                })
                .collect(),
        }
    }
}

/// PET induction with default limits and the given depth; truncation is an
/// error.
pub fn pet_trace(f: &PolyFamily, max_depth: usize) -> Result<PetTrace> {
    let limits = TraceLimits { max_depth, ..TraceLimits::default() };
    let trace = pet_trace_with(f, &limits)?;
    match &trace.end {
        TraceEnd::BaseCase => Ok(trace),
        TraceEnd::Truncated(reason) => {
            Err(Error::Truncated { depth: trace.depth(), reason: reason.clone() })
        }
    }
}

/// Repeatedly drops constant members, stops once at most one member (with
/// multiplicity) remains, and otherwise derives at the pivot after checking
/// that the derived family precedes the current one. Hitting a limit ends
/// the trace with [`TraceEnd::Truncated`]; a failed descent check is an
/// error.
pub fn pet_trace_with(f: &PolyFamily, limits: &TraceLimits) -> Result<PetTrace> {
    let mut steps = Vec::new();
    let mut current = f.clone();
    loop {
        let (live, dropped) = current.drop_constants();
        let total = live.total();
        if total <= BigUint::one() {
            return Ok(PetTrace {
                steps,
                end: TraceEnd::BaseCase,
                final_total: total,
                final_distinct: live.distinct(),
                final_dropped: dropped,
            });
        }
        let finish = |steps: Vec<PetStep>, reason: String| PetTrace {
            steps,
            end: TraceEnd::Truncated(reason),
            final_total: total.clone(),
            final_distinct: live.distinct(),
            final_dropped: dropped.clone(),
        };
        if steps.len() >= limits.max_depth {
            let reason = format!("depth limit {} reached", limits.max_depth);
            return Ok(finish(steps, reason));
        }
        let classes = live.classes()?;
        let p = pivot(&live)?;
        let derived = derived_family(&live, p)?;
        if derived.distinct() > limits.max_members {
            let reason = format!(
                "derived family has {} distinct maps, limit {}",
                derived.distinct(),
                limits.max_members
            );
            return Ok(finish(steps, reason));
        }
        let dclasses = derived.classes()?;
        let descent = match classes_descent(&dclasses, &classes, limits.matching_cap) {
            Ok(Some(d)) => d,
            Ok(None) => return Err(Error::DescentViolation { step: steps.len() }),
            Err(Error::FamilyTooLarge { classes, cap }) => {
                let reason = format!("{classes} classes at one weight exceed matching cap {cap}");
                return Ok(finish(steps, reason));
            }
            Err(e) => return Err(e),
        };
        steps.push(PetStep {
            dropped,
            distinct: live.distinct(),
            total,
            classes: classes.iter().map(|c| (c.weight(), c.size.clone())).collect(),
            assignment: assignment_of(&classes),
            pivot: p,
            pivot_weight: weight(&live.members[p].0)?,
            descent,
            derived: limits.keep_families.then(|| derived.clone()),
        });
        current = derived;
    }
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberDoc {
    pub map: PolyMapDoc,
    /// Decimal string; multiplicities can exceed 64 bits.
    pub multiplicity: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub dropped: String,
    pub distinct: usize,
    pub total: String,
    /// `[[c, d, count], …]`
    pub assignment: Vec<[u64; 3]>,
    pub class_sizes: Vec<(u32, u32, String)>,
    pub pivot: usize,
    pub pivot_weight: [u32; 2],
    pub descent: Descent,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub derived: Option<Vec<MemberDoc>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub terminated: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncation: Option<String>,
    pub depth: usize,
    pub final_total: String,
    pub final_distinct: usize,
    pub final_dropped: String,
    pub steps: Vec<StepDoc>,
}
