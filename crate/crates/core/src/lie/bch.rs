//! Truncated Baker–Campbell–Hausdorff series in Dynkin's form.
//!
//! `log(exp X · exp Y) = Σ_w c_w [w]` where `w` ranges over words in the two
//! letters `X`, `Y`, `[w]` is the right-nested bracket `[w_1, [w_2, … w_m]]`
//! and the coefficient is
//!
//! ```text
//! c_w = 1/|w| · Σ_n (-1)^(n-1)/n · Σ 1/(r_1! s_1! ⋯ r_n! s_n!)
//! ```
//!
//! summed over all ways of writing `w = X^{r_1} Y^{s_1} ⋯ X^{r_n} Y^{s_n}`
//! with every block non-empty. In a step-`s` algebra only words of length
//! at most `s` contribute.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::LieAlgebra;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::ring::Coeff;

pub const DEFAULT_BCH_BOUND: u32 = 6;

/// Words are stored as byte strings: `0` for `X`, `1` for `Y`.
#[derive(Debug, Clone)]
pub struct BchTable {
    bound: u32,
    terms: Vec<(Vec<u8>, Rational)>,
}

impl BchTable {
    pub fn new(bound: u32) -> Self {
        let mut terms = Vec::new();
        for len in 1..=bound as usize {
            for bits in 0u32..(1u32 << len) {
                let word: Vec<u8> = (0..len).map(|p| ((bits >> (len - 1 - p)) & 1) as u8).collect();
                // the innermost bracket [a, a] vanishes
                if len >= 2 && word[len - 1] == word[len - 2] {
                    continue;
                }
                let c = dynkin_coefficient(&word);
                if !c.is_zero() {
                    terms.push((word, c));
                }
            }
        }
        Self { bound, terms }
    }

    pub fn default_table() -> &'static BchTable {
        static TABLE: OnceLock<BchTable> = OnceLock::new();
        TABLE.get_or_init(|| BchTable::new(DEFAULT_BCH_BOUND))
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn terms(&self) -> &[(Vec<u8>, Rational)] {
        &self.terms
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn dynkin_coefficient(word: &[u8]) -> Rational {
    let m = word.len();
    // ways[p][n]: Σ over splittings of word[p..] into n blocks of Π 1/(r! s!)
    let mut ways = vec![vec![Rational::zero(); m + 1]; m + 1];
    ways[m][0] = Rational::one();
    for p in (0..m).rev() {
        let run_x = word[p..].iter().take_while(|&&c| c == 0).count();
        for r in 0..=run_x {
            let max_s = if r < run_x {
                0
            } else {
                word[p + r..].iter().take_while(|&&c| c == 1).count()
            };
            for s in 0..=max_s {
                if r + s == 0 {
                    continue;
                }
                let weight = Rational::new(BigInt::one(), factorial(r) * factorial(s));
                for n in 1..=m {
                    if ways[p + r + s][n - 1].is_zero() {
                        continue;
                    }
                    let add = &weight * &ways[p + r + s][n - 1];
                    ways[p][n] += add;
                }
            }
        }
    }
    let mut total = Rational::zero();
    for (n, w) in ways[0].iter().enumerate().take(m + 1).skip(1) {
        let sign = if n % 2 == 1 { 1 } else { -1 };
        total += Rational::new(BigInt::from(sign), BigInt::from(n)) * w;
    }
    total / Rational::from_integer(BigInt::from(m))
}

/// Exponential coordinates of `exp(x)·exp(y)` over any coefficient ring.
pub fn bch_coords<C: Coeff>(
    algebra: &LieAlgebra,
    table: &BchTable,
    x: &[C],
    y: &[C],
) -> Result<Vec<C>> {
    let step = algebra.step();
    if step > table.bound() {
        return Err(Error::StepTooLarge { step, bound: table.bound() });
    }
    let dim = algebra.dim();
    if x.len() != dim || y.len() != dim {
        return Err(Error::ArityMismatch { expected: dim, got: x.len().min(y.len()) });
    }
    let mut out: Vec<C> = x.to_vec();
    for (o, b) in out.iter_mut().zip(y) {
        o.add_assign_ref(b);
    }
    if algebra.is_abelian() || step < 2 {
        return Ok(out);
    }

    let letters = [x, y];
    let mut memo: HashMap<Vec<u8>, Option<Vec<C>>> = HashMap::new();
    for (word, coeff) in table.terms() {
        if word.len() < 2 || word.len() > step as usize {
            continue;
        }
        if let Some(v) = nested(algebra, &letters, word, &mut memo) {
            for (o, c) in out.iter_mut().zip(&v) {
                if !c.is_zero_coeff() {
                    o.add_assign_ref(&c.scale(coeff));
                }
            }
        }
    }
    Ok(out)
}

/// Right-nested bracket of a word; `None` stands for the zero vector.
fn nested<C: Coeff>(
    algebra: &LieAlgebra,
    letters: &[&[C]; 2],
    word: &[u8],
    memo: &mut HashMap<Vec<u8>, Option<Vec<C>>>,
) -> Option<Vec<C>> {
    if word.len() == 1 {
        let v = letters[word[0] as usize];
        return if v.iter().all(Coeff::is_zero_coeff) { None } else { Some(v.to_vec()) };
    }
    if let Some(hit) = memo.get(word) {
        return hit.clone();
    }
    let inner = nested(algebra, letters, &word[1..], memo);
    let result = inner.and_then(|inner| {
        let head = letters[word[0] as usize];
        let v = algebra.bracket_coords(head, &inner);
        if v.iter().all(Coeff::is_zero_coeff) {
            None
        } else {
            Some(v)
        }
    });
    memo.insert(word.to_vec(), result.clone());
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn coeff_of(table: &BchTable, word: &[u8]) -> Rational {
        table
            .terms()
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    #[test]
    fn low_order_coefficients() {
        let t = BchTable::new(3);
        assert_eq!(coeff_of(&t, &[0]), ratio(1, 1));
        assert_eq!(coeff_of(&t, &[1]), ratio(1, 1));
        // X + Y + 1/2[X,Y] + 1/12[X,[X,Y]] - 1/12[Y,[X,Y]]
        let xy = coeff_of(&t, &[0, 1]) - coeff_of(&t, &[1, 0]);
        assert_eq!(xy, ratio(1, 2));
        let xxy = coeff_of(&t, &[0, 0, 1]) - coeff_of(&t, &[0, 1, 0]);
        let yxy = coeff_of(&t, &[1, 0, 1]) - coeff_of(&t, &[1, 1, 0]);
        assert_eq!(xxy, ratio(1, 12));
        assert_eq!(yxy, ratio(-1, 12));
    }

    #[test]
    fn table_is_finite_and_small() {
        let t = BchTable::new(DEFAULT_BCH_BOUND);
        assert!(t.terms().len() < 64);
    }
}
