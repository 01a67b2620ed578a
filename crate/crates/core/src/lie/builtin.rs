//! Stock nilpotent Lie algebras.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{BracketEntry, LieAlgebra};
use crate::error::{Error, ParseError, Result};
use crate::rational::{int, Rational};

pub const MAX_UPPER_TRIANGULAR: usize = 6;
pub const MAX_FREE_STEP: u32 = 6;
pub const MAX_FREE_GENERATORS: usize = 4;
pub const MAX_ABELIAN: usize = 64;
pub const MAX_HEISENBERG: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Abelian(usize),
    /// Dimension `2m + 1`.
    Heisenberg(usize),
    /// Strictly upper triangular `n × n` matrices, step `n - 1`.
    StrictlyUpperTriangular(usize),
    FreeNilpotent { generators: usize, step: u32 },
}

impl Builtin {
    pub fn build(self) -> Result<LieAlgebra> {
        let alg = match self {
            Builtin::Abelian(d) => abelian(d),
            Builtin::Heisenberg(n) => heisenberg(n),
            Builtin::StrictlyUpperTriangular(n) => upper_triangular(n),
            Builtin::FreeNilpotent { generators, step } => free_nilpotent(generators, step),
        }?;
        Ok(alg.with_name(self.name()))
    }

    pub fn name(self) -> String {
        match self {
            Builtin::Abelian(d) => format!("abelian({d})"),
            Builtin::Heisenberg(n) => format!("heisenberg({n})"),
            Builtin::StrictlyUpperTriangular(n) => format!("strictly_upper_triangular({n})"),
            Builtin::FreeNilpotent { generators, step } => format!("free_nilpotent({generators},{step})"),
        }
    }
}

/// Parses names such as `heisenberg(3)` or `free_nilpotent(2,3)`.
pub fn parse_builtin(name: &str) -> Result<Builtin, ParseError> {
    let bad = || ParseError::Builtin(name.to_string());
    let s = name.trim();
    let (kind, args) = s.split_once('(').ok_or_else(bad)?;
    let args = args.strip_suffix(')').ok_or_else(bad)?;
    let nums: Vec<usize> = args
        .split(',')
        .map(|a| a.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    match (kind.trim(), nums.as_slice()) {
        ("abelian", [d]) => Ok(Builtin::Abelian(*d)),
        ("heisenberg", [n]) => Ok(Builtin::Heisenberg(*n)),
        ("strictly_upper_triangular", [n]) => Ok(Builtin::StrictlyUpperTriangular(*n)),
        ("free_nilpotent", [g, s]) => Ok(Builtin::FreeNilpotent { generators: *g, step: *s as u32 }),
        _ => Err(bad()),
    }
}

fn abelian(d: usize) -> Result<LieAlgebra> {
    if d == 0 || d > MAX_ABELIAN {
        return Err(Error::UnsupportedSize(format!("abelian({d})")));
    }
    let labels = (1..=d).map(|i| format!("e{i}")).collect();
    LieAlgebra::new(labels, vec![1; d], 1, vec![])
}

fn heisenberg(n: usize) -> Result<LieAlgebra> {
    if n < 3 || n.is_multiple_of(2) || n > MAX_HEISENBERG {
        return Err(Error::UnsupportedSize(format!("heisenberg({n})")));
    }
    let m = (n - 1) / 2;
    let mut labels = Vec::with_capacity(n);
    if m == 1 {
        labels.extend(["X".to_string(), "Y".to_string()]);
    } else {
        labels.extend((1..=m).map(|i| format!("X{i}")));
        labels.extend((1..=m).map(|i| format!("Y{i}")));
    }
    labels.push("Z".into());
    let mut layers = vec![1; 2 * m];
    layers.push(2);
    let entries = (0..m)
        .map(|i| BracketEntry { i, j: m + i, image: vec![(2 * m, Rational::one())] })
        .collect();
    LieAlgebra::new(labels, layers, 2, entries)
}

/// Basis `E_ij` (`i < j`) ordered by layer `j - i`, then by row.
pub(crate) fn upper_triangular_basis(n: usize) -> Vec<(usize, usize)> {
    let mut basis = Vec::new();
    for gap in 1..n {
        for i in 0..(n - gap) {
            basis.push((i, i + gap));
        }
    }
    basis
}

fn upper_triangular(n: usize) -> Result<LieAlgebra> {
    if !(2..=MAX_UPPER_TRIANGULAR).contains(&n) {
        return Err(Error::UnsupportedSize(format!("strictly_upper_triangular({n})")));
    }
    let basis = upper_triangular_basis(n);
    let index: BTreeMap<(usize, usize), usize> = basis.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let labels = basis.iter().map(|(i, j)| format!("E{}{}", i + 1, j + 1)).collect();
    let layers = basis.iter().map(|(i, j)| (j - i) as u32).collect();
    let mut entries = Vec::new();
    for (a, &(i, j)) in basis.iter().enumerate() {
        for (b, &(k, l)) in basis.iter().enumerate() {
            if a >= b {
                continue;
            }
            // [E_ij, E_kl] = δ_jk E_il − δ_li E_kj
            let mut image = Vec::new();
            if j == k {
                image.push((index[&(i, l)], int(1)));
            }
            if l == i {
                image.push((index[&(k, j)], int(-1)));
            }
            if !image.is_empty() {
                entries.push(BracketEntry { i: a, j: b, image });
            }
        }
    }
    LieAlgebra::new(labels, layers, (n - 1) as u32, entries)
}

/// Dimension of the degree-`n` component of the free Lie algebra on `g`
/// generators (Witt's formula).
pub fn witt_dimension(g: usize, n: usize) -> usize {
    let mut total: i64 = 0;
    for d in 1..=n {
        if n.is_multiple_of(d) {
            total += mobius(d) * (g as i64).pow((n / d) as u32);
        }
    }
    (total / n as i64) as usize
}

fn mobius(n: usize) -> i64 {
    let mut n = n;
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

type Word = Vec<u8>;
type AssocPoly = BTreeMap<Word, Rational>;

/// Lyndon words of length `1..=max_len` over `g` letters, in (length, lex)
/// order (Duval's algorithm).
fn lyndon_words(g: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![0];
    while !w.is_empty() {
        out.push(w.clone());
        let base = w.clone();
        while w.len() < max_len {
            let c = base[w.len() % base.len()];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last as usize == g - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn is_lyndon(w: &[u8]) -> bool {
    (1..w.len()).all(|i| w[i..] > *w)
}

/// Standard factorization `w = u v` with `v` the longest proper Lyndon suffix.
fn standard_split(w: &[u8]) -> usize {
    (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("Lyndon word of length >= 2 has a Lyndon suffix")
}

fn commutator(a: &AssocPoly, b: &AssocPoly) -> AssocPoly {
    let mut out = AssocPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let prod = ca * cb;
            let mut ab = wa.clone();
            ab.extend_from_slice(wb);
            *out.entry(ab).or_insert_with(Rational::zero) += &prod;
            let mut ba = wb.clone();
            ba.extend_from_slice(wa);
            *out.entry(ba).or_insert_with(Rational::zero) -= &prod;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Free `step`-nilpotent Lie algebra on `g` generators in the Lyndon–Hall
/// basis: basis elements are Lyndon words ordered by (length, lex) and
/// bracketed by standard factorization.
fn free_nilpotent(g: usize, step: u32) -> Result<LieAlgebra> {
    if g == 0 || g > MAX_FREE_GENERATORS || step == 0 || step > MAX_FREE_STEP {
        return Err(Error::UnsupportedSize(format!("free_nilpotent({g},{step})")));
    }
    if g == 1 {
        return LieAlgebra::new(vec!["x1".into()], vec![1], 1, vec![]);
    }
    let words = lyndon_words(g, step as usize);
    let index: BTreeMap<Word, usize> = words.iter().enumerate().map(|(k, w)| (w.clone(), k)).collect();

    let mut expansions: Vec<AssocPoly> = Vec::with_capacity(words.len());
    let mut labels: Vec<String> = Vec::with_capacity(words.len());
    for w in &words {
        if w.len() == 1 {
            expansions.push(AssocPoly::from([(w.clone(), Rational::one())]));
            labels.push(format!("x{}", w[0] + 1));
        } else {
            let cut = standard_split(w);
            let (u, v) = (&w[..cut], &w[cut..]);
            let (iu, iv) = (index[u], index[v]);
            expansions.push(commutator(&expansions[iu], &expansions[iv]));
            labels.push(format!("[{},{}]", labels[iu], labels[iv]));
        }
    }

    let layers: Vec<u32> = words.iter().map(|w| w.len() as u32).collect();
    let mut entries = Vec::new();
    for a in 0..words.len() {
        for b in (a + 1)..words.len() {
            if words[a].len() + words[b].len() > step as usize {
                continue;
            }
            let mut rest = commutator(&expansions[a], &expansions[b]);
            let mut image = Vec::new();
            // the smallest surviving word is always Lyndon and leads its
            // own standard bracketing
            while let Some((w, c)) = rest.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
                let k = *index.get(&w).ok_or_else(|| {
                    Error::InvalidAlgebra(format!("non-Lyndon leading word {w:?} in Hall reduction"))
                })?;
                image.push((k, c.clone()));
                for (wk, ck) in &expansions[k] {
                    let e = rest.entry(wk.clone()).or_insert_with(Rational::zero);
                    *e -= &c * ck;
                }
                rest.retain(|_, v| !v.is_zero());
            }
            if !image.is_empty() {
                entries.push(BracketEntry { i: a, j: b, image });
            }
        }
    }
    LieAlgebra::new(labels, layers, step, entries)
}
