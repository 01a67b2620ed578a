//! Translation actions on the torus `ℝ^d/ℤ^d` and on the Heisenberg
//! nilmanifold `G/Γ`, Haar sampling and bounded test functions.
//!
//! Heisenberg points are written in matrix coordinates `(a, b, c)`, standing
//! for the unitriangular matrix with `a`, `b` on the superdiagonal and `c` in
//! the corner. `Γ` is the integer matrices, acting on the right, and every
//! coset has a unique representative in `[0,1)³` obtained by clearing `b`,
//! then `a`, then the central coordinate `c`. Haar measure is Lebesgue measure
//! on that cube.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{Builtin, GroupElement, LieAlgebra};
use crate::polymap::AlgebraRef;
use crate::rational::{format_rational, frac, parse_rational, ratio, to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Torus { dim: usize },
    Heisenberg3,
}

/// A linear map from a source algebra into the system's algebra, checked to
/// be a Lie algebra homomorphism. `matrix[i][j]` is the `i`-th target
/// coordinate of the image of source basis vector `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    source: Arc<LieAlgebra>,
    matrix: Vec<Vec<Rational>>,
}

impl Embedding {
    pub fn source(&self) -> &Arc<LieAlgebra> {
        &self.source
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.matrix
    }

    fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter().zip(x).filter(|(a, b)| !a.is_zero() && !b.is_zero()).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NilSystem {
    kind: SystemKind,
    algebra: Arc<LieAlgebra>,
    embedding: Option<Embedding>,
}

/// A point of the fundamental domain.
#[derive(Clone, Debug, PartialEq)]
pub struct NilPoint(pub Vec<f64>);

/// A group element converted once to the floats used by the action.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared(pub(crate) Vec<f64>);

impl Prepared {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl NilSystem {
    pub fn torus(dim: usize) -> Result<Self> {
        let algebra = Arc::new(Builtin::Abelian(dim).build()?);
        Ok(Self { kind: SystemKind::Torus { dim }, algebra, embedding: None })
    }

    pub fn heisenberg3() -> Self {
        let algebra = Arc::new(Builtin::Heisenberg(3).build().expect("heisenberg(3) is valid"));
        Self { kind: SystemKind::Heisenberg3, algebra, embedding: None }
    }

    /// Lets elements of `source` act through `matrix`.
    pub fn with_embedding(mut self, source: Arc<LieAlgebra>, matrix: Vec<Vec<Rational>>) -> Result<Self> {
        let (n, m) = (self.algebra.dim(), source.dim());
        if matrix.len() != n || matrix.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidSetting(format!("embedding must be a {n}×{m} matrix")));
        }
        let emb = Embedding { source: source.clone(), matrix };
        let column = |j: usize| emb.matrix.iter().map(|r| r[j].clone()).collect::<Vec<_>>();
        for i in 0..m {
            for j in (i + 1)..m {
                let mut e = vec![Rational::zero(); m];
                e[i] = Rational::from_integer(1.into());
                let mut f = vec![Rational::zero(); m];
                f[j] = Rational::from_integer(1.into());
                let lhs = emb.apply(&source.bracket_coords(&e, &f));
                let rhs = self.algebra.bracket_coords(&column(i), &column(j));
                if lhs != rhs {
                    return Err(Error::InvalidSetting(format!(
                        "embedding is not a homomorphism on basis pair ({i}, {j})"
                    )));
                }
            }
        }
        self.embedding = Some(emb);
        Ok(self)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    /// The algebra whose group elements this system accepts.
    pub fn acting_algebra(&self) -> &Arc<LieAlgebra> {
        self.embedding.as_ref().map_or(&self.algebra, |e| &e.source)
    }

    pub fn point_dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Exact conversion of an acting element into action floats. Everything
    /// that can be reduced mod 1 before rounding is.
    pub fn prepare(&self, g: &GroupElement) -> Result<Prepared> {
        if !g.algebra().same_as(self.acting_algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        let coords = match &self.embedding {
            Some(e) => e.apply(g.coords()),
            None => g.coords().to_vec(),
        };
        Ok(self.prepare_coords(&coords))
    }

    /// As [`prepare`](Self::prepare) for exponential coordinates already in
    /// the system's own algebra.
    pub fn prepare_coords(&self, coords: &[Rational]) -> Prepared {
        match self.kind {
            SystemKind::Torus { .. } => Prepared(coords.iter().map(|c| to_f64(&frac(c))).collect()),
            SystemKind::Heisenberg3 => {
                let (x, y, z) = (&coords[0], &coords[1], &coords[2]);
                let c = z + x * y * ratio(1, 2);
                Prepared(vec![to_f64(x), to_f64(y), to_f64(&frac(&c))])
            }
        }
    }

    /// `out = reduce(g · x)`.
    #[inline]
    pub fn act_prepared(&self, g: &Prepared, x: &[f64], out: &mut [f64]) {
        let g = &g.0;
        match self.kind {
            SystemKind::Torus { .. } => {
                for ((o, a), b) in out.iter_mut().zip(g).zip(x) {
                    *o = wrap(a + b);
                }
            }
            SystemKind::Heisenberg3 => {
                out[0] = g[0] + x[0];
                out[1] = g[1] + x[1];
                out[2] = g[2] + x[2] + g[0] * x[1];
                self.reduce(out);
            }
        }
    }

    pub fn act(&self, g: &GroupElement, x: &NilPoint) -> Result<NilPoint> {
        let p = self.prepare(g)?;
        if x.0.len() != self.point_dim() {
            return Err(Error::ArityMismatch { expected: self.point_dim(), got: x.0.len() });
        }
        let mut out = vec![0.0; x.0.len()];
        self.act_prepared(&p, &x.0, &mut out);
        Ok(NilPoint(out))
    }

    /// Moves a point of the cover into the fundamental domain. Idempotent on
    /// points already in it.
    #[inline]
    pub fn reduce(&self, x: &mut [f64]) {
        match self.kind {
            SystemKind::Torus { .. } => {
                for v in x.iter_mut() {
                    *v = wrap(*v);
                }
            }
            SystemKind::Heisenberg3 => {
                let (nb, b) = split(x[1]);
                let mut c = x[2] - x[0] * nb;
                let (_, a) = split(x[0]);
                c = split(c).1;
                x[0] = a;
                x[1] = b;
                x[2] = c;
            }
        }
    }

    /// Distance in the quotient: the smallest sup-norm coordinate distance
    /// over nearby lattice translates of `y`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let circ = |d: f64| {
            let d = d - d.round();
            d.abs()
        };
        match self.kind {
            SystemKind::Torus { .. } => x.iter().zip(y).map(|(a, b)| circ(a - b)).fold(0.0, f64::max),
            SystemKind::Heisenberg3 => {
                let mut best = f64::INFINITY;
                for m in -1..=1 {
                    for n in -1..=1 {
                        let (m, n) = (m as f64, n as f64);
                        let a = y[0] + m;
                        let b = y[1] + n;
                        let c = y[2] + y[0] * n;
                        let d = (x[0] - a).abs().max((x[1] - b).abs()).max(circ(x[2] - c));
                        best = best.min(d);
                    }
                }
                best
            }
        }
    }

    /// `n` i.i.d. Haar points, deterministic in `seed`.
    pub fn sample_haar(&self, seed: u64, n: usize) -> Vec<NilPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| NilPoint(self.haar_point(&mut rng))).collect()
    }

    pub(crate) fn haar_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.point_dim()).map(|_| rng.gen::<f64>()).collect()
    }

    pub fn to_doc(&self) -> SystemDoc {
        let (kind, dim) = match self.kind {
            SystemKind::Torus { dim } => ("torus", Some(dim)),
            SystemKind::Heisenberg3 => ("heisenberg3", None),
        };
        SystemDoc {
            kind: kind.to_string(),
            dim,
            embedding: self.embedding.as_ref().map(|e| EmbeddingDoc {
                source: AlgebraRef::of(&e.source),
                matrix: e.matrix.iter().map(|r| r.iter().map(format_rational).collect()).collect(),
            }),
        }
    }
}

/// `x − ⌊x⌋`, forced into `[0, 1)`.
#[inline]
fn wrap(x: f64) -> f64 {
    split(x).1
}

/// `(n, r)` with `x = n + r`, `n` integral and `r ∈ [0, 1)`.
#[inline]
fn split(x: f64) -> (f64, f64) {
    let n = x.floor();
    let r = x - n;
    if r >= 1.0 {
        (n + 1.0, 0.0)
    } else {
        (n, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FnKind {
    /// `x ↦ cos or sin of 2π k·x` on the torus, or of `2π(k₁a + k₂b)` on the
    /// Heisenberg nilmanifold (a character of the horizontal torus).
    Character,
    /// Heisenberg only: `2π(k₁a + k₂b + m c)` on the fundamental-domain
    /// representative; `freq = [k₁, k₂, m]`.
    Vertical,
}

/// A real test function bounded by 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: FnKind,
    pub freq: Vec<i64>,
    pub part: Part,
}

impl TestFunction {
    pub fn character(freq: Vec<i64>, part: Part) -> Self {
        Self { kind: FnKind::Character, freq, part }
    }

    pub fn vertical(k1: i64, k2: i64, m: i64, part: Part) -> Self {
        Self { kind: FnKind::Vertical, freq: vec![k1, k2, m], part }
    }

    /// The constant function `1` on a system with `dim` horizontal
    /// frequencies.
    pub fn one(dim: usize) -> Self {
        Self::character(vec![0; dim], Part::Cos)
    }

    pub fn check(&self, sys: &NilSystem) -> Result<()> {
        let expected = match (sys.kind, self.kind) {
            (SystemKind::Torus { dim }, FnKind::Character) => dim,
            (SystemKind::Heisenberg3, FnKind::Character) => 2,
            (SystemKind::Heisenberg3, FnKind::Vertical) => 3,
            (SystemKind::Torus { .. }, FnKind::Vertical) => {
                return Err(Error::InvalidSetting("vertical functions need the Heisenberg system".into()))
            }
        };
        if self.freq.len() != expected {
            return Err(Error::ArityMismatch { expected, got: self.freq.len() });
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.freq.iter().all(|&k| k == 0)
    }

    /// Whether the Haar integral vanishes.
    pub fn is_mean_zero(&self) -> bool {
        !self.is_constant() || self.part == Part::Sin
    }

    /// `∫ f dμ`.
    pub fn mean(&self) -> f64 {
        if self.is_mean_zero() {
            0.0
        } else {
            1.0
        }
    }

    #[inline]
    pub fn phase(&self, x: &[f64]) -> f64 {
        self.freq.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum::<f64>()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_constant() {
            return self.mean();
        }
        let theta = TAU * self.phase(x);
        match self.part {
            Part::Cos => theta.cos(),
            Part::Sin => theta.sin(),
        }
    }
}

pub fn eval_fn(f: &TestFunction, x: &NilPoint) -> f64 {
    f.eval(&x.0)
}

pub fn act(sys: &NilSystem, g: &GroupElement, x: &NilPoint) -> Result<NilPoint> {
    sys.act(g, x)
}

pub fn sample_haar(sys: &NilSystem, seed: u64, n: usize) -> Vec<NilPoint> {
    sys.sample_haar(seed, n)
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDoc {
    pub source: AlgebraRef,
    pub matrix: Vec<Vec<String>>,
}

/// `{"kind": "torus" | "heisenberg3", "dim": d, "embedding": {...}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingDoc>,
}

impl SystemDoc {
    pub fn build(&self) -> Result<NilSystem> {
        let sys = match self.kind.as_str() {
            "torus" => {
                let dim = self.dim.ok_or_else(|| Error::InvalidSetting("torus needs \"dim\"".into()))?;
                NilSystem::torus(dim)?
            }
            "heisenberg3" => {
                if let Some(d) = self.dim {
                    if d != 3 {
                        return Err(Error::InvalidSetting(format!("heisenberg3 has dim 3, not {d}")));
                    }
                }
                NilSystem::heisenberg3()
            }
            other => return Err(Error::UnsupportedSystem(other.to_string())),
        };
        match &self.embedding {
            None => Ok(sys),
            Some(e) => {
                let source = Arc::new(e.source.resolve()?);
                let matrix = e
                    .matrix
                    .iter()
                    .map(|r| r.iter().map(|s| parse_rational(s).map_err(Error::from)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                sys.with_embedding(source, matrix)
            }
        }
    }
}
