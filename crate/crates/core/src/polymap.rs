//! Polynomial maps `ℝ × ℝ^r → G` stored as `exp ∘ Φ` with `Φ` a vector of
//! polynomials in exponential coordinates.
//!
//! Variable `0` is the distinguished time variable `t`; the remaining
//! variables are parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lie::{bch_coords, BchTable, GroupElement, LieAlgebra};
use crate::poly::{vars_from, MultiPoly, Vars};
use crate::rational::{format_rational, Rational};

/// Default cap on the number of symbolic differences tried by
/// [`PolyMap::polynomial_degree`].
pub const DEFAULT_DIFFERENCE_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap {
    algebra: Arc<LieAlgebra>,
    vars: Vars,
    coords: Vec<MultiPoly>,
}

/// `t^d ψ(h)` in `G^c / G^{c+1}`: class `c`, degree `d` and the
/// parameter-polynomial coefficients of the layer-`c` coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeadingTerm {
    pub class: u32,
    pub degree: u32,
    pub coefficient: Vec<MultiPoly>,
}

/// One component of a differencing direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shift {
    Value(Rational),
    /// A fresh symbolic variable with this name, appended to the domain.
    Symbol(String),
}

impl PolyMap {
    pub fn new(algebra: Arc<LieAlgebra>, vars: Vars, coords: Vec<MultiPoly>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::ArityMismatch { expected: 1, got: 0 });
        }
        if coords.len() != algebra.dim() {
            return Err(Error::ArityMismatch { expected: algebra.dim(), got: coords.len() });
        }
        let coords = coords
            .into_iter()
            .map(|c| {
                if c.vars() == &vars {
                    Ok(c)
                } else {
                    Err(Error::VariableMismatch(vars.to_vec(), c.vars().to_vec()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { algebra, vars, coords })
    }

    /// Parses one expression per coordinate, e.g. `["t", "t^2", "0"]`.
    pub fn parse<S: AsRef<str>>(algebra: Arc<LieAlgebra>, var_names: &[&str], exprs: &[S]) -> Result<Self> {
        let vars = vars_from(var_names);
        let coords = exprs
            .iter()
            .map(|e| MultiPoly::parse(vars.clone(), e.as_ref()).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(algebra, vars, coords)
    }

    pub fn identity(algebra: Arc<LieAlgebra>, vars: Vars) -> Self {
        let coords = vec![MultiPoly::zero(vars.clone()); algebra.dim()];
        Self { algebra, vars, coords }
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn coords(&self) -> &[MultiPoly] {
        &self.coords
    }

    pub fn param_vars(&self) -> Vars {
        self.vars[1..].to_vec().into()
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(MultiPoly::is_zero)
    }

    /// Checks `φ(0, ·) ≡ e` exactly.
    pub fn check_normalized(&self) -> Result<()> {
        for (k, c) in self.coords.iter().enumerate() {
            let at_zero = c.coefficients_in(0).swap_remove(0);
            if !at_zero.is_zero() {
                return Err(Error::NotNormalized { coord: k, residue: at_zero.to_string() });
            }
        }
        Ok(())
    }

    pub fn eval(&self, point: &[Rational]) -> Result<GroupElement> {
        let coords = self.coords.iter().map(|c| c.eval(point)).collect::<Result<Vec<_>>>()?;
        GroupElement::new(self.algebra.clone(), coords)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.algebra.same_as(&other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        if self.vars != other.vars {
            return Err(Error::VariableMismatch(self.vars.to_vec(), other.vars.to_vec()));
        }
        Ok(())
    }

    /// `x ↦ φ(x)·ψ(x)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coords = bch_coords(&self.algebra, BchTable::default_table(), &self.coords, &other.coords)?;
        Ok(Self { algebra: self.algebra.clone(), vars: self.vars.clone(), coords })
    }

    /// `x ↦ φ(x)^{-1}`.
    pub fn inverse(&self) -> Self {
        Self {
            algebra: self.algebra.clone(),
            vars: self.vars.clone(),
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Re-expresses the map over a larger variable list (matched by name).
    pub fn align_to(&self, vars: &Vars) -> Result<Self> {
        if &self.vars == vars {
            return Ok(self.clone());
        }
        if vars.first() != self.vars.first() {
            return Err(Error::VariableMismatch(self.vars.to_vec(), vars.to_vec()));
        }
        let coords = self.coords.iter().map(|c| c.align_to(vars)).collect::<Result<Vec<_>>>()?;
        Ok(Self { algebra: self.algebra.clone(), vars: vars.clone(), coords })
    }

    /// Composes with an affine change of variables. Each variable of `self`
    /// is replaced by its image in `assignment`, or by the variable of the
    /// same name in `new_vars` when it has none.
    pub fn substitute(&self, new_vars: &Vars, assignment: &BTreeMap<String, MultiPoly>) -> Result<Self> {
        for name in assignment.keys() {
            if !self.vars.contains(name) {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }
        let images = self
            .vars
            .iter()
            .map(|v| match assignment.get(v) {
                Some(img) => {
                    if img.total_degree().unwrap_or(0) > 1 {
                        return Err(Error::NotAffine(v.clone()));
                    }
                    img.align_to(new_vars)
                }
                None => MultiPoly::var_named(new_vars.clone(), v),
            })
            .collect::<Result<Vec<_>>>()?;
        let coords = self.coords.iter().map(|c| c.compose(&images)).collect::<Result<Vec<_>>>()?;
        Ok(Self { algebra: self.algebra.clone(), vars: new_vars.clone(), coords })
    }

    /// `g ↦ φ(g − h)·φ(g)^{-1}` for a direction `h` with one component per
    /// variable. Symbolic components are appended as new variables.
    pub fn difference(&self, direction: &[Shift]) -> Result<Self> {
        if direction.len() != self.vars.len() {
            return Err(Error::ArityMismatch { expected: self.vars.len(), got: direction.len() });
        }
        let mut names: Vec<String> = self.vars.to_vec();
        for s in direction {
            if let Shift::Symbol(name) = s {
                if names.contains(name) {
                    return Err(Error::InvalidSetting(format!("shift symbol `{name}` already in use")));
                }
                names.push(name.clone());
            }
        }
        let new_vars: Vars = names.into();
        let mut assignment = BTreeMap::new();
        for (v, s) in self.vars.iter().zip(direction) {
            let var = MultiPoly::var_named(new_vars.clone(), v)?;
            let shifted = match s {
                Shift::Value(c) if c.is_zero() => continue,
                Shift::Value(c) => &var - &MultiPoly::constant(new_vars.clone(), c.clone()),
                Shift::Symbol(name) => &var - &MultiPoly::var_named(new_vars.clone(), name)?,
            };
            assignment.insert(v.clone(), shifted);
        }
        let moved = self.substitute(&new_vars, &assignment)?;
        let here = self.align_to(&new_vars)?;
        moved.product(&here.inverse())
    }

    /// Degree in the differencing sense: `d` such that `d + 1` symbolic
    /// differences annihilate the map (0 for the constant identity).
    pub fn polynomial_degree(&self) -> Result<usize> {
        self.polynomial_degree_capped(DEFAULT_DIFFERENCE_CAP)
    }

    pub fn polynomial_degree_capped(&self, cap: usize) -> Result<usize> {
        Ok(self.annihilation_order_capped(cap + 1)?.saturating_sub(1))
    }

    /// The least `d` such that `d` symbolic differences (in every original
    /// variable) reduce the map to the identity.
    pub fn annihilation_order(&self) -> Result<usize> {
        self.annihilation_order_capped(DEFAULT_DIFFERENCE_CAP + 1)
    }

    pub fn annihilation_order_capped(&self, cap: usize) -> Result<usize> {
        let original = self.vars.len();
        let mut current = self.clone();
        for d in 0..=cap {
            if current.is_identity() {
                return Ok(d);
            }
            if d == cap {
                break;
            }
            let direction: Vec<Shift> = (0..current.vars.len())
                .map(|i| {
                    if i < original {
                        Shift::Symbol(fresh_name(&current.vars, &format!("s{}_{}", d + 1, self.vars[i])))
                    } else {
                        Shift::Value(Rational::zero())
                    }
                })
                .collect();
            current = current.difference(&direction)?;
        }
        Err(Error::DifferencingCap(cap))
    }

    /// Greatest `c` with `img φ ⊆ G^c`.
    pub fn internal_class(&self) -> Result<u32> {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, _)| self.algebra.layer(k))
            .min()
            .ok_or(Error::ConstantIdentity)
    }

    pub fn leading_term(&self) -> Result<LeadingTerm> {
        let class = self.internal_class()?;
        let layer = self.algebra.layer_indices(class);
        let degree = layer
            .iter()
            .filter_map(|&k| self.coords[k].degree_in(0))
            .max()
            .expect("class layer has a nonzero coordinate");
        let params = self.param_vars();
        let coefficient = layer
            .iter()
            .map(|&k| {
                let mut cs = self.coords[k].coefficients_in(0);
                if cs.len() > degree as usize {
                    cs.swap_remove(degree as usize)
                } else {
                    MultiPoly::zero(params.clone())
                }
            })
            .collect();
        Ok(LeadingTerm { class, degree, coefficient })
    }

    pub fn to_doc(&self) -> PolyMapDoc {
        PolyMapDoc::from_map(self)
    }
}

/// `base`, or `base` with a numeric suffix, whichever is not yet in `vars`.
pub fn fresh_name(vars: &Vars, base: &str) -> String {
    if !vars.iter().any(|v| v == base) {
        return base.to_string();
    }
    (1..)
        .map(|n| format!("{base}{n}"))
        .find(|cand| !vars.iter().any(|v| v == cand))
        .expect("unbounded suffixes")
}

pub fn pointwise_product(phi: &PolyMap, psi: &PolyMap) -> Result<PolyMap> {
    phi.product(psi)
}

pub fn pointwise_inverse(phi: &PolyMap) -> PolyMap {
    phi.inverse()
}

// ---------------------------------------------------------------------------
// JSON form

use serde::{Deserialize, Serialize};

use crate::lie::{parse_builtin, AlgebraDoc};

/// Either a builtin name like `"heisenberg(3)"` or an inline algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Builtin(String),
    Inline(AlgebraDoc),
}

impl AlgebraRef {
    pub fn resolve(&self) -> Result<LieAlgebra> {
        match self {
            AlgebraRef::Builtin(name) => parse_builtin(name)?.build(),
            AlgebraRef::Inline(doc) => doc.to_algebra(),
        }
    }

    pub fn of(alg: &LieAlgebra) -> Self {
        match alg.name() {
            Some(n) => AlgebraRef::Builtin(n.to_string()),
            None => AlgebraRef::Inline(AlgebraDoc::from_algebra(alg)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub exp: Vec<u32>,
    pub coef: String,
}

/// A coordinate polynomial: a term list, or an expression string such as
/// `"t^2*h1 - 1/2*t"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordDoc {
    Terms(Vec<TermDoc>),
    Expr(String),
}

/// `{"algebra": <ref>, "vars": [...], "coords": [[{"exp": [..], "coef": "p/q"}, ...], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMapDoc {
    pub algebra: AlgebraRef,
    pub vars: Vec<String>,
    pub coords: Vec<CoordDoc>,
}

impl PolyMapDoc {
    pub fn from_map(map: &PolyMap) -> Self {
        let coords = map
            .coords
            .iter()
            .map(|c| {
                CoordDoc::Terms(
                    c.terms().map(|(m, v)| TermDoc { exp: m.clone(), coef: format_rational(v) }).collect(),
                )
            })
            .collect();
        Self { algebra: AlgebraRef::of(&map.algebra), vars: map.vars.to_vec(), coords }
    }

    pub fn to_map(&self) -> Result<PolyMap> {
        let algebra = Arc::new(self.algebra.resolve()?);
        self.to_map_in(algebra)
    }

    /// Builds the map against an already resolved algebra (shared across a
    /// family).
    pub fn to_map_in(&self, algebra: Arc<LieAlgebra>) -> Result<PolyMap> {
        let vars = vars_from(&self.vars);
        let coords = self
            .coords
            .iter()
            .map(|c| match c {
                CoordDoc::Expr(s) => MultiPoly::parse(vars.clone(), s).map_err(Error::from),
                CoordDoc::Terms(ts) => MultiPoly::from_terms(
                    vars.clone(),
                    ts.iter()
                        .map(|t| Ok((t.exp.clone(), crate::rational::parse_rational(&t.coef)?)))
                        .collect::<Result<Vec<_>>>()?,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(algebra, vars, coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Builtin;
    use crate::rational::{int, ratio};

    fn h3() -> Arc<LieAlgebra> {
        Arc::new(Builtin::Heisenberg(3).build().unwrap())
    }

    fn map(alg: &Arc<LieAlgebra>, vars: &[&str], exprs: &[&str]) -> PolyMap {
        PolyMap::parse(alg.clone(), vars, exprs).unwrap()
    }

    #[test]
    fn eval_substitutes() {
        let phi = map(&h3(), &["t"], &["t^2", "0", "0"]);
        assert_eq!(phi.eval(&[int(2)]).unwrap().coords(), &[int(4), int(0), int(0)]);
        assert!(phi.eval(&[int(0)]).unwrap().is_identity());
        assert!(phi.eval(&[int(1), int(2)]).is_err());
    }

    #[test]
    fn product_of_one_parameter_subgroups() {
        let alg = h3();
        let x = map(&alg, &["t"], &["t", "0", "0"]);
        let y = map(&alg, &["t"], &["0", "t", "0"]);
        let p = x.product(&y).unwrap();
        assert_eq!(p, map(&alg, &["t"], &["t", "t", "1/2*t^2"]));
        assert_eq!(p.eval(&[int(1)]).unwrap().coords(), &[int(1), int(1), ratio(1, 2)]);
        assert!(p.product(&p.inverse()).unwrap().is_identity());
    }

    #[test]
    fn substitute_shift_and_zero() {
        let alg = h3();
        let phi = map(&alg, &["t"], &["t^2", "0", "0"]);
        let tk = vars_from(&["t", "k"]);
        let mut a = BTreeMap::new();
        a.insert("t".to_string(), MultiPoly::parse(tk.clone(), "t + k").unwrap());
        let shifted = phi.substitute(&tk, &a).unwrap();
        assert_eq!(shifted, map(&alg, &["t", "k"], &["t^2 + 2*t*k + k^2", "0", "0"]));

        let same = phi.substitute(phi.vars(), &BTreeMap::new()).unwrap();
        assert_eq!(same, phi);

        let mut z = BTreeMap::new();
        z.insert("t".to_string(), MultiPoly::zero(phi.vars().clone()));
        assert!(phi.substitute(phi.vars(), &z).unwrap().is_identity());

        let mut bad = BTreeMap::new();
        bad.insert("t".to_string(), MultiPoly::parse(tk.clone(), "t^2").unwrap());
        assert_eq!(phi.substitute(&tk, &bad), Err(Error::NotAffine("t".into())));
        let mut unknown = BTreeMap::new();
        unknown.insert("q".to_string(), MultiPoly::zero(tk.clone()));
        assert!(phi.substitute(&tk, &unknown).is_err());
    }

    #[test]
    fn difference_linear_abelian() {
        let alg = Arc::new(Builtin::Abelian(2).build().unwrap());
        let phi = map(&alg, &["t"], &["3*t", "-t"]);
        let d = phi.difference(&[Shift::Value(int(2))]).unwrap();
        assert_eq!(d, map(&alg, &["t"], &["-6", "2"]));
        let c = PolyMap::identity(alg.clone(), vars_from(&["t"]));
        assert!(c.difference(&[Shift::Symbol("h".into())]).unwrap().is_identity());
    }

    #[test]
    fn repeated_symbolic_differences_of_square() {
        let alg = h3();
        let phi = map(&alg, &["t"], &["t^2", "0", "0"]);
        let d1 = phi.difference(&[Shift::Symbol("a".into())]).unwrap();
        assert!(d1.coords()[0].degree_in(0) == Some(1));
        let d2 = d1.difference(&[Shift::Symbol("b".into()), Shift::Value(int(0))]).unwrap();
        assert!(!d2.is_identity());
        assert_eq!(d2.coords()[0].degree_in(0), Some(0));
        let d3 = d2
            .difference(&[Shift::Symbol("c".into()), Shift::Value(int(0)), Shift::Value(int(0))])
            .unwrap();
        assert!(d3.is_identity());
        assert_eq!(phi.annihilation_order().unwrap(), 3);
        assert_eq!(phi.polynomial_degree().unwrap(), 2);
    }

    #[test]
    fn degrees_of_basic_maps() {
        let alg = h3();
        assert_eq!(PolyMap::identity(alg.clone(), vars_from(&["t"])).polynomial_degree().unwrap(), 0);
        assert_eq!(map(&alg, &["t"], &["t", "0", "0"]).polynomial_degree().unwrap(), 1);
        let x = map(&alg, &["t"], &["t", "0", "0"]);
        let y2 = map(&alg, &["t"], &["0", "t^2", "0"]);
        assert_eq!(x.product(&y2).unwrap().polynomial_degree().unwrap(), 3);
    }

    #[test]
    fn class_and_leading_terms() {
        let alg = h3();
        assert_eq!(map(&alg, &["t"], &["0", "0", "t"]).internal_class().unwrap(), 2);
        assert_eq!(map(&alg, &["t"], &["t", "0", "0"]).internal_class().unwrap(), 1);
        assert_eq!(
            PolyMap::identity(alg.clone(), vars_from(&["t"])).internal_class(),
            Err(Error::ConstantIdentity)
        );

        let lt = map(&alg, &["t"], &["t^2 + t", "0", "0"]).leading_term().unwrap();
        let params = vars_from::<&str>(&[]);
        assert_eq!((lt.class, lt.degree), (1, 2));
        assert_eq!(lt.coefficient, vec![MultiPoly::one(params.clone()), MultiPoly::zero(params)]);

        let lt = map(&alg, &["t", "h1"], &["0", "0", "t*h1"]).leading_term().unwrap();
        assert_eq!((lt.class, lt.degree), (2, 1));
        assert_eq!(lt.coefficient, vec![MultiPoly::var(vars_from(&["h1"]), 0)]);

        let a = map(&alg, &["t"], &["t", "0", "0"]);
        let b = map(&alg, &["t"], &["-t", "t^3", "0"]);
        let lt = a.product(&b).unwrap().leading_term().unwrap();
        let none = vars_from::<&str>(&[]);
        assert_eq!((lt.class, lt.degree), (1, 3));
        assert_eq!(lt.coefficient, vec![MultiPoly::zero(none.clone()), MultiPoly::one(none)]);
    }

    #[test]
    fn upper_triangular_corner_is_class_three() {
        let alg = Arc::new(Builtin::StrictlyUpperTriangular(4).build().unwrap());
        let corner = alg.label_index("E14").unwrap();
        let mut exprs = vec!["0"; alg.dim()];
        exprs[corner] = "t";
        assert_eq!(map(&alg, &["t"], &exprs).internal_class().unwrap(), 3);
    }

    #[test]
    fn normalization_check() {
        let alg = h3();
        assert!(map(&alg, &["t", "h"], &["t*h", "t", "0"]).check_normalized().is_ok());
        let bad = map(&alg, &["t", "h"], &["t", "h", "0"]).check_normalized();
        assert_eq!(bad, Err(Error::NotNormalized { coord: 1, residue: "h".into() }));
    }

    #[test]
    fn json_roundtrip_keeps_builtin_reference() {
        let phi = map(&h3(), &["t", "h"], &["t*h", "1/2*t^2", "0"]);
        let json = serde_json::to_value(phi.to_doc()).unwrap();
        assert_eq!(json["algebra"], "heisenberg(3)");
        let doc: PolyMapDoc = serde_json::from_value(json).unwrap();
        assert_eq!(doc.to_map().unwrap(), phi);
        let from_expr: PolyMapDoc = serde_json::from_value(serde_json::json!({
            "algebra": "heisenberg(3)", "vars": ["t", "h"], "coords": ["t*h", "1/2*t^2", "0"]
        }))
        .unwrap();
        assert_eq!(from_expr.to_map().unwrap(), phi);
    }
}
