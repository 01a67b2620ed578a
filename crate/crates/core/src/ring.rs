//! The coefficient ring seen by the bracket and BCH routines.
//!
//! Group products are evaluated both on concrete rational coordinates and on
//! coordinates that are themselves polynomials, so the Lie machinery is written
//! once against this trait.

use num_traits::{One, Zero};

use crate::rational::Rational;

pub trait Coeff: Clone + PartialEq + std::fmt::Debug + Send + Sync {
    /// The additive identity in the same ambient ring as `self`.
    fn zero_like(&self) -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn add_assign_ref(&mut self, rhs: &Self);
    fn mul_ref(&self, rhs: &Self) -> Self;
    fn scale(&self, by: &Rational) -> Self;
    fn negated(&self) -> Self;
}

impl Coeff for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
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
        if by.is_one() {
            self.clone()
        } else {
            self * by
        }
    }

    fn negated(&self) -> Self {
        -self
    }
}
