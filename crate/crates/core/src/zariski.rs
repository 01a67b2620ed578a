//! Coefficient varieties of parametrized polynomial maps and certified
//! sampling of parameters that avoid finitely many proper varieties.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{vars_from, MultiPoly, Vars};
use crate::polymap::PolyMap;
use crate::rational::{format_rational, int, Rational};

/// Initial half-width of the integer sampling box.
pub const INITIAL_BOX: i64 = 8;
const MAX_BOX: i64 = 1 << 40;

/// The common zero set of its generators, all over the same variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variety {
    vars: Vars,
    generators: Vec<MultiPoly>,
}

impl Variety {
    pub fn new(vars: Vars, generators: Vec<MultiPoly>) -> Result<Self> {
        let generators = generators.iter().map(|g| g.align_to(&vars)).collect::<Result<Vec<_>>>()?;
        Ok(Self { vars, generators })
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn generators(&self) -> &[MultiPoly] {
        &self.generators
    }

    /// Some generator is a nonzero polynomial.
    pub fn is_proper(&self) -> bool {
        self.generators.iter().any(|g| !g.is_zero())
    }

    pub fn contains(&self, point: &[Rational]) -> Result<bool> {
        for g in &self.generators {
            if !g.eval(point)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// A generator that does not vanish at `point`, with its value.
    pub fn witness(&self, point: &[Rational]) -> Result<Option<(usize, Rational)>> {
        for (i, g) in self.generators.iter().enumerate() {
            let v = g.eval(point)?;
            if !v.is_zero() {
                return Ok(Some((i, v)));
            }
        }
        Ok(None)
    }

    /// Pulls the generators back along `s ↦ base + s·direction`. The result
    /// is improper exactly when the whole line lies in the variety.
    pub fn restrict_to_line(&self, base: &[Rational], direction: &[Rational]) -> Result<Variety> {
        let n = self.vars.len();
        if base.len() != n || direction.len() != n {
            return Err(Error::ArityMismatch { expected: n, got: base.len().min(direction.len()) });
        }
        let line = vars_from(&["s"]);
        let s = MultiPoly::var(line.clone(), 0);
        let images: Vec<MultiPoly> = base
            .iter()
            .zip(direction)
            .map(|(b, d)| &MultiPoly::constant(line.clone(), b.clone()) + &s.scale(d))
            .collect();
        let generators = self.generators.iter().map(|g| g.compose(&images)).collect::<Result<Vec<_>>>()?;
        Ok(Variety { vars: line, generators })
    }
}

/// Coefficients of the powers of `t` (variable 0), as polynomials in the
/// remaining variables.
pub fn t_coefficients(p: &MultiPoly) -> Vec<MultiPoly> {
    p.coefficients_in(0)
}

/// `{h : ℓ(log φ(t,h)) = 0 for all t}` with `ℓ` given by its coordinates in
/// the basis of the algebra.
pub fn vanishing_variety(phi: &PolyMap, functional: &[Rational]) -> Result<Variety> {
    let dim = phi.algebra().dim();
    if functional.len() != dim {
        return Err(Error::ArityMismatch { expected: dim, got: functional.len() });
    }
    let mut combo = MultiPoly::zero(phi.vars().clone());
    for (c, l) in phi.coords().iter().zip(functional) {
        if !l.is_zero() {
            combo += &c.scale(l);
        }
    }
    Variety::new(phi.param_vars(), t_coefficients(&combo))
}

/// A finite union of proper varieties in a common parameter space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeagreSet {
    vars: Vars,
    varieties: Vec<Variety>,
}

impl MeagreSet {
    pub fn new(vars: Vars) -> Self {
        Self { vars, varieties: Vec::new() }
    }

    /// Adds a variety after checking that it is proper.
    pub fn push(&mut self, v: Variety) -> Result<()> {
        if !v.is_proper() {
            return Err(Error::ImproperVariety(self.varieties.len()));
        }
        let v = Variety::new(self.vars.clone(), v.generators)?;
        self.varieties.push(v);
        Ok(())
    }

    pub fn from_varieties(vars: Vars, varieties: Vec<Variety>) -> Result<Self> {
        let mut m = Self::new(vars);
        for v in varieties {
            m.push(v)?;
        }
        Ok(m)
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn varieties(&self) -> &[Variety] {
        &self.varieties
    }

    pub fn is_empty(&self) -> bool {
        self.varieties.is_empty()
    }
}

/// Whether some variety of `m` contains `point`.
pub fn membership(m: &MeagreSet, point: &[Rational]) -> Result<bool> {
    for v in &m.varieties {
        if v.contains(point)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// A sampled parameter point together with one nonvanishing generator per
/// variety.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericSample {
    pub point: Vec<Rational>,
    /// `(variety, generator, value)` with `value ≠ 0`.
    pub witnesses: Vec<(usize, usize, Rational)>,
    pub attempts: usize,
    pub box_size: i64,
}

impl GenericSample {
    pub fn to_doc(&self, vars: &Vars) -> SampleDoc {
        SampleDoc {
            vars: vars.to_vec(),
            point: self.point.iter().map(format_rational).collect(),
            witnesses: self
                .witnesses
                .iter()
                .map(|(v, g, val)| WitnessDoc { variety: *v, generator: *g, value: format_rational(val) })
                .collect(),
            attempts: self.attempts,
            box_size: self.box_size,
        }
    }
}

/// Draws integer points uniformly from `[−B, B]^r`, starting at
/// `B = INITIAL_BOX` and doubling `B` after every rejected draw, until a point
/// lies outside every variety. Deterministic in `seed`.
pub fn generic_sample(m: &MeagreSet, seed: u64, max_attempts: usize) -> Result<GenericSample> {
    if let Some(i) = m.varieties.iter().position(|v| !v.is_proper()) {
        return Err(Error::ImproperVariety(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = INITIAL_BOX;
    'attempt: for attempt in 1..=max_attempts {
        let point: Vec<Rational> = (0..m.vars.len()).map(|_| int(rng.gen_range(-b..=b))).collect();
        let mut witnesses = Vec::with_capacity(m.varieties.len());
        for (vi, v) in m.varieties.iter().enumerate() {
            match v.witness(&point)? {
                Some((gi, val)) => witnesses.push((vi, gi, val)),
                None => {
                    b = (b * 2).min(MAX_BOX);
                    continue 'attempt;
                }
            }
        }
        assert!(!membership(m, &point)?, "sample inside the meagre set");
        return Ok(GenericSample { point, witnesses, attempts: attempt, box_size: b });
    }
    Err(Error::AttemptsExhausted(max_attempts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub variety: usize,
    pub generator: usize,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDoc {
    pub vars: Vec<String>,
    pub point: Vec<String>,
    pub witnesses: Vec<WitnessDoc>,
    pub attempts: usize,
    pub box_size: i64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Builtin;
    use std::sync::Arc;

    fn p(vars: &Vars, s: &str) -> MultiPoly {
        MultiPoly::parse(vars.clone(), s).unwrap()
    }

    #[test]
    fn coefficients_in_t() {
        let v = vars_from(&["t", "h1", "h2"]);
        let cs = t_coefficients(&p(&v, "t^2*h1 + t*h2 + 3"));
        let r = vars_from(&["h1", "h2"]);
        assert_eq!(cs, vec![p(&r, "3"), p(&r, "h2"), p(&r, "h1")]);
        assert_eq!(t_coefficients(&p(&v, "h1*h2")), vec![p(&r, "h1*h2")]);
    }

    #[test]
    fn varieties_of_maps() {
        let alg = Arc::new(Builtin::Heisenberg(3).build().unwrap());
        let phi = PolyMap::parse(alg.clone(), &["t", "h1"], &["t*h1", "0", "0"]).unwrap();
        let x = vanishing_variety(&phi, &[int(1), int(0), int(0)]).unwrap();
        let h = vars_from(&["h1"]);
        assert_eq!(x.generators(), &[p(&h, "0"), p(&h, "h1")]);
        assert!(x.is_proper());
        assert!(!vanishing_variety(&phi, &[int(0), int(1), int(0)]).unwrap().is_proper());

        let psi = PolyMap::parse(alg, &["t", "h1", "h2"], &["t*(h1 - h2)", "0", "t"]).unwrap();
        let d = vanishing_variety(&psi, &[int(1), int(0), int(0)]).unwrap();
        assert!(d.contains(&[int(3), int(3)]).unwrap());
        assert!(!d.contains(&[int(3), int(2)]).unwrap());
    }

    #[test]
    fn properness() {
        let h = vars_from(&["h1", "h2"]);
        assert!(!Variety::new(h.clone(), vec![]).unwrap().is_proper());
        assert!(Variety::new(h.clone(), vec![p(&h, "h1")]).unwrap().is_proper());
        assert!(Variety::new(h.clone(), vec![p(&h, "h1^2 + h2^2"), p(&h, "0")]).unwrap().is_proper());
        let mut m = MeagreSet::new(h.clone());
        assert_eq!(m.push(Variety::new(h, vec![]).unwrap()), Err(Error::ImproperVariety(0)));
    }

    #[test]
    fn sampling_and_membership() {
        let h = vars_from(&["h1", "h2"]);
        let lines = MeagreSet::from_varieties(
            h.clone(),
            vec![
                Variety::new(h.clone(), vec![p(&h, "h1 - h2")]).unwrap(),
                Variety::new(h.clone(), vec![p(&h, "h1 + h2")]).unwrap(),
            ],
        )
        .unwrap();
        let s = generic_sample(&lines, 42, 64).unwrap();
        assert!(!membership(&lines, &s.point).unwrap());
        assert_eq!(s.witnesses.len(), 2);
        assert_eq!(generic_sample(&lines, 42, 64).unwrap(), s);

        let empty = MeagreSet::new(h.clone());
        assert_eq!(generic_sample(&empty, 1, 1).unwrap().attempts, 1);
        assert!(!membership(&empty, &[int(0), int(0)]).unwrap());
        assert!(membership(&lines, &[int(1), int(1)]).unwrap());
        assert!(!membership(&lines, &[int(1), int(2)]).unwrap());
    }

    #[test]
    fn line_restriction() {
        let h = vars_from(&["h1", "h2"]);
        let v = Variety::new(h.clone(), vec![p(&h, "h1 - h2")]).unwrap();
        let on = v.restrict_to_line(&[int(1), int(1)], &[int(2), int(2)]).unwrap();
        assert!(!on.is_proper());
        let across = v.restrict_to_line(&[int(0), int(0)], &[int(1), int(0)]).unwrap();
        assert!(across.is_proper());
    }
}
