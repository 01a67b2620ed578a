//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! A [`MultiPoly`] carries its ordered variable list. Arithmetic between two
//! polynomials requires identical variable lists; use [`MultiPoly::align_to`]
//! to move a polynomial into a larger list first.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, ParseError, Result};
use crate::rational::{format_rational, int, Rational};
use crate::ring::Coeff;

/// Exponent vector, one entry per variable.
pub type Monomial = Vec<u32>;

pub type Vars = Arc<[String]>;

pub fn vars_from<S: AsRef<str>>(names: &[S]) -> Vars {
    names.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().into()
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiPoly {
    vars: Vars,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero(vars: Vars) -> Self {
        Self { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Vars, c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            let n = p.vars.len();
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    pub fn one(vars: Vars) -> Self {
        Self::constant(vars, Rational::one())
    }

    /// The polynomial `x_idx`.
    pub fn var(vars: Vars, idx: usize) -> Self {
        let mut exps = vec![0; vars.len()];
        exps[idx] = 1;
        let mut p = Self::zero(vars);
        p.terms.insert(exps, Rational::one());
        p
    }

    pub fn var_named(vars: Vars, name: &str) -> Result<Self> {
        let idx = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(Self::var(vars, idx))
    }

    pub fn from_terms<I>(vars: Vars, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            if m.len() != p.vars.len() {
                return Err(Error::ArityMismatch { expected: p.vars.len(), got: m.len() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&e| e == 0))
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&vec![0; self.vars.len()]).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    /// Degree in one variable; `None` for the zero polynomial.
    pub fn degree_in(&self, idx: usize) -> Option<u32> {
        self.terms.keys().map(|m| m[idx]).max()
    }

    pub fn uses_var(&self, idx: usize) -> bool {
        self.terms.keys().any(|m| m[idx] > 0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars.clone());
        }
        Self {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.vars.clone());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    fn check_vars(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars,
            "polynomial variable lists differ: {:?} vs {:?}",
            self.vars,
            other.vars
        );
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.vars.len() {
            return Err(Error::ArityMismatch { expected: self.vars.len(), got: point.len() });
        }
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(m) {
                if e > 0 {
                    term *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += term;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut term = crate::rational::to_f64(c);
                for (x, &e) in point.iter().zip(m) {
                    if e > 0 {
                        term *= x.powi(e as i32);
                    }
                }
                term
            })
            .sum()
    }

    /// Coefficients `p_0, …, p_d` of the powers of variable `idx`, each a
    /// polynomial in the remaining variables. The zero polynomial yields `[0]`.
    pub fn coefficients_in(&self, idx: usize) -> Vec<MultiPoly> {
        let rest: Vars = self
            .vars
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, v)| v.clone())
            .collect::<Vec<_>>()
            .into();
        let deg = self.degree_in(idx).unwrap_or(0) as usize;
        let mut out = vec![MultiPoly::zero(rest.clone()); deg + 1];
        for (m, c) in &self.terms {
            let mut reduced = m.clone();
            let power = reduced.remove(idx) as usize;
            out[power].add_term(reduced, c.clone());
        }
        out
    }

    /// Re-expresses the polynomial over `target`, which must contain every
    /// variable of `self` (matched by name).
    pub fn align_to(&self, target: &Vars) -> Result<Self> {
        if Arc::ptr_eq(&self.vars, target) || self.vars == *target {
            return Ok(Self { vars: target.clone(), terms: self.terms.clone() });
        }
        let positions = self
            .vars
            .iter()
            .map(|v| {
                target
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| Error::UnknownVariable(v.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::zero(target.clone());
        for (m, c) in &self.terms {
            let mut exps = vec![0; target.len()];
            for (&e, &pos) in m.iter().zip(&positions) {
                exps[pos] = e;
            }
            out.add_term(exps, c.clone());
        }
        Ok(out)
    }

    /// Polynomial composition: variable `i` of `self` is replaced by
    /// `images[i]`; all images share one variable list, which becomes the
    /// variable list of the result.
    pub fn compose(&self, images: &[MultiPoly]) -> Result<Self> {
        if images.len() != self.vars.len() {
            return Err(Error::ArityMismatch { expected: self.vars.len(), got: images.len() });
        }
        let target = match images.first() {
            Some(p) => p.vars.clone(),
            None => return Ok(Self { vars: Vars::from(Vec::new()), terms: self.terms.clone() }),
        };
        for img in images {
            if img.vars != target {
                return Err(Error::VariableMismatch(target.to_vec(), img.vars.to_vec()));
            }
        }
        // powers[i][e] = images[i]^e, filled lazily
        let mut powers: Vec<Vec<MultiPoly>> =
            images.iter().map(|_| vec![MultiPoly::one(target.clone())]).collect();
        let mut out = MultiPoly::zero(target.clone());
        for (m, c) in &self.terms {
            let mut term = MultiPoly::constant(target.clone(), c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][e as usize];
            }
            out += &term;
        }
        Ok(out)
    }

    pub fn parse(vars: Vars, input: &str) -> Result<Self, ParseError> {
        let mut parser = Parser { src: input, chars: input.char_indices().peekable(), vars };
        let p = parser.expr()?;
        parser.skip_ws();
        if let Some(&(pos, _)) = parser.chars.peek() {
            return Err(parser.fail(&format!("unexpected input at byte {pos}")));
        }
        Ok(p)
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly({self})")
    }
}

/// Graded order, highest total degree first; ties broken so that larger
/// exponents of earlier variables come first.
fn display_order(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| display_order(a.0, b.0));
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let mono: Vec<String> = m
                .iter()
                .zip(self.vars.iter())
                .filter(|(&e, _)| e > 0)
                .map(|(&e, v)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else {
                if !mag.is_one() {
                    write!(f, "{}*", format_rational(&mag))?;
                }
                write!(f, "{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<'a> std::ops::Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> std::ops::Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl std::ops::AddAssign<&MultiPoly> for MultiPoly {
    fn add_assign(&mut self, rhs: &MultiPoly) {
        self.check_vars(rhs);
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl std::ops::SubAssign<&MultiPoly> for MultiPoly {
    fn sub_assign(&mut self, rhs: &MultiPoly) {
        self.check_vars(rhs);
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl<'a> std::ops::Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    // exponents add under multiplication
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_vars(rhs);
        let mut out = MultiPoly::zero(self.vars.clone());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl Coeff for MultiPoly {
    fn zero_like(&self) -> Self {
        MultiPoly::zero(self.vars.clone())
    }

    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }

    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += rhs;
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn scale(&self, by: &Rational) -> Self {
        MultiPoly::scale(self, by)
    }

    fn negated(&self) -> Self {
        -self
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    vars: Vars,
}

impl Parser<'_> {
    fn fail(&self, reason: &str) -> ParseError {
        ParseError::Polynomial { input: self.src.to_string(), reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.peek().map(|&(_, c)| c)
    }

    fn expr(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = MultiPoly::zero(self.vars.clone());
        let mut sign = match self.peek() {
            Some('-') => {
                self.chars.next();
                -1
            }
            Some('+') => {
                self.chars.next();
                1
            }
            _ => 1,
        };
        loop {
            let term = self.term()?;
            if sign < 0 {
                acc -= &term;
            } else {
                acc += &term;
            }
            match self.peek() {
                Some('+') => {
                    self.chars.next();
                    sign = 1;
                }
                Some('-') => {
                    self.chars.next();
                    sign = -1;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.chars.next();
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                Some('/') => {
                    self.chars.next();
                    let d = self.number()?;
                    if d.is_zero() {
                        return Err(self.fail("division by zero"));
                    }
                    acc = acc.scale(&d.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<MultiPoly, ParseError> {
        let base = match self.peek() {
            Some('(') => {
                self.chars.next();
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.fail("missing `)`"));
                }
                self.chars.next();
                inner
            }
            Some('-') => {
                self.chars.next();
                let f = self.factor()?;
                return Ok(-&f);
            }
            Some(c) if c.is_ascii_digit() => MultiPoly::constant(self.vars.clone(), self.number()?),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let name = self.ident();
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => MultiPoly::var(self.vars.clone(), i),
                    None => return Err(self.fail(&format!("unknown variable `{name}`"))),
                }
            }
            _ => return Err(self.fail("expected a number, variable or `(`")),
        };
        if self.peek() == Some('^') {
            self.chars.next();
            let e = self.number()?;
            if !e.is_integer() || e.is_negative() {
                return Err(self.fail("exponent must be a non-negative integer"));
            }
            let e: u32 = e.to_integer().try_into().map_err(|_| self.fail("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        self.skip_ws();
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_ascii_digit() || c == '.' {
                s.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        if s.is_empty() {
            return Err(self.fail("expected a number"));
        }
        crate::rational::parse_rational(&s).map_err(|_| self.fail(&format!("bad number `{s}`")))
    }
}

/// Convenience for tests and builders: `x_idx * c`.
pub fn monomial(vars: Vars, exps: Monomial, c: Rational) -> MultiPoly {
    MultiPoly::from_terms(vars, [(exps, c)]).expect("monomial arity")
}

pub fn int_poly(vars: Vars, n: i64) -> MultiPoly {
    MultiPoly::constant(vars, int(n))
}
