//! Graded nilpotent Lie algebras and their simply connected groups in
//! exponential coordinates.
//!
//! A basis vector of layer `ℓ` spans part of `g^ℓ / g^{ℓ+1}` for the lower
//! central series `g = g^1 ⊇ g^2 ⊇ … ⊇ g^s`. Group elements are stored as
//! `exp(X)` through the coordinates of `X`; the product is the truncated
//! Baker–Campbell–Hausdorff series.

mod bch;
mod builtin;
mod serial;

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::ring::Coeff;

pub use bch::{bch_coords, BchTable, DEFAULT_BCH_BOUND};
pub use builtin::{parse_builtin, witt_dimension, Builtin};
pub use serial::AlgebraDoc;

/// One sparse entry of the structure-constant table:
/// `[e_i, e_j] = Σ_k c_k e_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub image: Vec<(usize, Rational)>,
}

#[derive(Clone)]
pub struct LieAlgebra {
    /// Builtin name, when the algebra came from [`Builtin::build`]; not part
    /// of equality.
    name: Option<String>,
    labels: Vec<String>,
    layers: Vec<u32>,
    step: u32,
    /// `table[i][j]` is the sparse image of `[e_i, e_j]`.
    table: Vec<Vec<Vec<(usize, Rational)>>>,
}

impl PartialEq for LieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.layers == other.layers
            && self.step == other.step
            && self.table == other.table
    }
}

impl Eq for LieAlgebra {}

impl fmt::Debug for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieAlgebra")
            .field("labels", &self.labels)
            .field("layers", &self.layers)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl LieAlgebra {
    /// Builds an algebra from structure constants. An entry `(i, j)` whose
    /// partner `(j, i)` is absent is completed by antisymmetry; entries given
    /// for both orders are kept verbatim so [`LieAlgebra::verify`] can report
    /// inconsistencies.
    pub fn new(
        labels: Vec<String>,
        layers: Vec<u32>,
        step: u32,
        entries: Vec<BracketEntry>,
    ) -> Result<Self> {
        let dim = labels.len();
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if layers.len() != dim {
            return Err(Error::InvalidAlgebra(format!(
                "{} layers given for dimension {dim}",
                layers.len()
            )));
        }
        if step == 0 || layers.contains(&0) {
            return Err(Error::InvalidAlgebra("layers and step must be positive".into()));
        }
        let mut table = vec![vec![Vec::new(); dim]; dim];
        let mut given = vec![vec![false; dim]; dim];
        for e in &entries {
            if e.i >= dim || e.j >= dim || e.image.iter().any(|(k, _)| *k >= dim) {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index out of range in entry ({}, {})",
                    e.i, e.j
                )));
            }
            let mut dense = vec![Rational::zero(); dim];
            for (k, c) in &e.image {
                dense[*k] += c;
            }
            table[e.i][e.j] = sparse(&dense);
            given[e.i][e.j] = true;
        }
        for i in 0..dim {
            for j in 0..dim {
                if given[i][j] && !given[j][i] && i != j {
                    let neg = table[i][j].iter().map(|(k, c)| (*k, -c)).collect();
                    table[j][i] = neg;
                    given[j][i] = true;
                }
            }
        }
        Ok(Self { name: None, labels, layers, step, table })
    }

    pub(crate) fn with_name(mut self, name: String) -> Self {
        self.name = Some(name);
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn layers(&self) -> &[u32] {
        &self.layers
    }

    pub fn layer(&self, idx: usize) -> u32 {
        self.layers[idx]
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn is_abelian(&self) -> bool {
        self.table.iter().flatten().all(|e| e.is_empty())
    }

    /// Basis indices spanning layer `layer`.
    pub fn layer_indices(&self, layer: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.layers[i] == layer).collect()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> Rational {
        self.table[i][j]
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, usize, &[(usize, Rational)])> {
        self.table.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().filter(|(_, e)| !e.is_empty()).map(move |(j, e)| (i, j, e.as_slice()))
        })
    }

    /// Bracket of coordinate vectors over any coefficient ring.
    pub fn bracket_coords<C: Coeff>(&self, x: &[C], y: &[C]) -> Vec<C> {
        let zero = x[0].zero_like();
        let mut out = vec![zero; self.dim()];
        let nx: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_zero_coeff()).collect();
        let ny: Vec<usize> = (0..y.len()).filter(|&j| !y[j].is_zero_coeff()).collect();
        for &i in &nx {
            for &j in &ny {
                let entry = &self.table[i][j];
                if entry.is_empty() {
                    continue;
                }
                let prod = x[i].mul_ref(&y[j]);
                for (k, c) in entry {
                    out[*k].add_assign_ref(&prod.scale(c));
                }
            }
        }
        out
    }

    /// Exhaustive check of antisymmetry, the Jacobi identity and grading
    /// compatibility. An empty list means the algebra is valid.
    pub fn verify(&self) -> Vec<Violation> {
        let dim = self.dim();
        let mut out = Vec::new();

        let max_layer = self.layers.iter().copied().max().unwrap_or(0);
        if max_layer != self.step {
            out.push(Violation::StepMismatch { step: self.step, max_layer });
        }
        for l in 1..=max_layer {
            if !self.layers.contains(&l) {
                out.push(Violation::LayerGap { layer: l });
            }
        }

        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = self.structure_constant(i, j, k);
                    let b = self.structure_constant(j, i, k);
                    if a != -b.clone() && i <= j {
                        out.push(Violation::Antisymmetry { i, j, k });
                    }
                    if !a.is_zero() && self.layers[k] < self.layers[i] + self.layers[j] {
                        out.push(Violation::Grading { i, j, k });
                    }
                }
            }
        }

        let basis: Vec<Vec<Rational>> = (0..dim)
            .map(|i| {
                let mut v = vec![Rational::zero(); dim];
                v[i] = Rational::from_integer(1.into());
                v
            })
            .collect();
        for i in 0..dim {
            for j in (i + 1)..dim {
                for l in (j + 1)..dim {
                    let a = self.bracket_coords(&basis[i], &self.bracket_coords(&basis[j], &basis[l]));
                    let b = self.bracket_coords(&basis[j], &self.bracket_coords(&basis[l], &basis[i]));
                    let c = self.bracket_coords(&basis[l], &self.bracket_coords(&basis[i], &basis[j]));
                    for k in 0..dim {
                        if !(&a[k] + &b[k] + &c[k]).is_zero() {
                            out.push(Violation::Jacobi { i, j, l, k });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

fn sparse(dense: &[Rational]) -> Vec<(usize, Rational)> {
    dense
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.clone()))
        .collect()
}

/// A failed structural check, with 0-based basis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Antisymmetry { i: usize, j: usize, k: usize },
    Jacobi { i: usize, j: usize, l: usize, k: usize },
    Grading { i: usize, j: usize, k: usize },
    LayerGap { layer: u32 },
    StepMismatch { step: u32, max_layer: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { i, j, k } => write!(f, "antisymmetry fails at ({i}, {j}, {k})"),
            Violation::Jacobi { i, j, l, k } => {
                write!(f, "Jacobi identity fails for ({i}, {j}, {l}) in coordinate {k}")
            }
            Violation::Grading { i, j, k } => {
                write!(f, "bracket of {i} and {j} reaches {k} below the sum of their layers")
            }
            Violation::LayerGap { layer } => write!(f, "layer {layer} has no basis vectors"),
            Violation::StepMismatch { step, max_layer } => {
                write!(f, "declared step {step} but highest layer is {max_layer}")
            }
        }
    }
}

pub fn verify_algebra(algebra: &LieAlgebra) -> Vec<Violation> {
    algebra.verify()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieElement {
    algebra: Arc<LieAlgebra>,
    coords: Vec<Rational>,
}

impl LieElement {
    pub fn new(algebra: Arc<LieAlgebra>, coords: Vec<Rational>) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::ArityMismatch { expected: algebra.dim(), got: coords.len() });
        }
        Ok(Self { algebra, coords })
    }

    pub fn zero(algebra: Arc<LieAlgebra>) -> Self {
        let dim = algebra.dim();
        Self { algebra, coords: vec![Rational::zero(); dim] }
    }

    pub fn basis(algebra: Arc<LieAlgebra>, idx: usize) -> Self {
        let mut e = Self::zero(algebra);
        e.coords[idx] = Rational::from_integer(1.into());
        e
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn to_group(&self) -> GroupElement {
        GroupElement { algebra: self.algebra.clone(), coords: self.coords.clone() }
    }
}

pub fn bracket(x: &LieElement, y: &LieElement) -> Result<LieElement> {
    if !x.algebra.same_as(&y.algebra) {
        return Err(Error::AlgebraMismatch);
    }
    let coords = x.algebra.bracket_coords(&x.coords, &y.coords);
    Ok(LieElement { algebra: x.algebra.clone(), coords })
}

/// `exp(X)` for the stored coordinate vector `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    algebra: Arc<LieAlgebra>,
    coords: Vec<Rational>,
}

impl GroupElement {
    pub fn new(algebra: Arc<LieAlgebra>, coords: Vec<Rational>) -> Result<Self> {
        LieElement::new(algebra, coords).map(|e| e.to_group())
    }

    pub fn identity(algebra: Arc<LieAlgebra>) -> Self {
        LieElement::zero(algebra).to_group()
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn log(&self) -> LieElement {
        LieElement { algebra: self.algebra.clone(), coords: self.coords.clone() }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(crate::rational::to_f64).collect()
    }
}

/// Exponential coordinates of `exp(x)·exp(y)`.
pub fn bch_product(x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
    if !x.algebra.same_as(&y.algebra) {
        return Err(Error::AlgebraMismatch);
    }
    let table = BchTable::default_table();
    let coords = bch_coords(&x.algebra, table, &x.coords, &y.coords)?;
    Ok(GroupElement { algebra: x.algebra.clone(), coords })
}

pub fn group_inverse(x: &GroupElement) -> GroupElement {
    GroupElement { algebra: x.algebra.clone(), coords: x.coords.iter().map(|c| -c).collect() }
}
