//! Rational functions as reduced fractions of sparse polynomials.
//!
//! The representation is canonical: gcd(num, den) = 1 and the denominator is
//! monic with respect to the grevlex leading term, so structural equality is
//! mathematical equality.

use std::collections::HashMap;
use std::fmt;

use num::Zero;

use crate::error::{Error, Result};

use super::multipoly::MultiPoly;
use super::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct RatFunc {
    num: MultiPoly,
    den: MultiPoly,
}

impl RatFunc {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Mismatch("zero denominator".into()));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: MultiPoly, den: MultiPoly) -> Self {
        if num.is_zero() {
            return RatFunc { num: MultiPoly::zero(), den: MultiPoly::one() };
        }
        if let Some(c) = den.as_constant() {
            return RatFunc { num: num.scale(&c.recip()), den: MultiPoly::one() };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        if let Some(c) = den.as_constant() {
            return RatFunc { num: num.scale(&c.recip()), den: MultiPoly::one() };
        }
        let lc = den.leading_coeff();
        RatFunc { num: num.scale(&lc.recip()), den: den.scale(&lc.recip()) }
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        RatFunc { num: p, den: MultiPoly::one() }
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(r))
    }

    pub fn zero() -> Self {
        Self::from_poly(MultiPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(MultiPoly::one())
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The underlying polynomial when the denominator is 1.
    pub fn as_poly(&self) -> Option<&MultiPoly> {
        if self.den.is_one() { Some(&self.num) } else { None }
    }

    pub fn as_constant(&self) -> Option<Rational> {
        self.as_poly().and_then(|p| p.as_constant())
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::reduced(self.num.add(&other.num), self.den.clone());
        }
        let num = self
            .num
            .mul(&other.den)
            .add(&other.num.mul(&self.den));
        Self::reduced(num, self.den.mul(&other.den))
    }

    pub fn neg(&self) -> Self {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::reduced(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> Self {
        Self::reduced(self.num.mul(p), self.den.clone())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NotInvertible("reciprocal of zero".into()));
        }
        Ok(Self::reduced(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn derivative(&self, var: &str) -> Self {
        let n = self.num.derivative(var).mul(&self.den);
        let d = self.num.mul(&self.den.derivative(var));
        Self::reduced(n.sub(&d), self.den.mul(&self.den))
    }

    /// Substitutes a polynomial for one variable; fails if the denominator
    /// collapses to zero.
    pub fn substitute(&self, var: &str, value: &MultiPoly) -> Result<Self> {
        let den = self.den.substitute(var, value);
        if den.is_zero() {
            return Err(Error::NotInvertible(format!(
                "denominator vanishes under {var} substitution"
            )));
        }
        Ok(Self::reduced(self.num.substitute(var, value), den))
    }

    pub fn eval(&self, values: &HashMap<String, Rational>) -> Result<Rational> {
        let d = self.den.eval(values)?;
        if d.is_zero() {
            return Err(Error::NotInvertible("denominator vanishes at point".into()));
        }
        Ok(self.num.eval(values)? / d)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> MultiPoly {
        MultiPoly::parse(src).unwrap()
    }

    fn rf(n: &str, d: &str) -> RatFunc {
        RatFunc::new(p(n), p(d)).unwrap()
    }

    #[test]
    fn construction_reduces_and_normalizes() {
        let f = rf("x^2 - 1", "2*x + 2");
        assert_eq!(f.num(), &p("1/2*x - 1/2"));
        assert_eq!(f.den(), &p("1"));
        let g = rf("x", "2*y");
        assert_eq!(g.den(), &p("y"));
        assert_eq!(g.num(), &p("1/2*x"));
    }

    #[test]
    fn field_operations() {
        let a = rf("1", "x");
        let b = rf("1", "y");
        let s = a.add(&b);
        assert_eq!(s, rf("x + y", "x*y"));
        assert_eq!(s.sub(&b), a);
        assert_eq!(a.mul(&b), rf("1", "x*y"));
        assert_eq!(a.div(&b).unwrap(), rf("y", "x"));
        assert!(RatFunc::zero().recip().is_err());
    }

    #[test]
    fn quotient_rule() {
        let f = rf("x^2", "y");
        assert_eq!(f.derivative("x"), rf("2*x", "y"));
        assert_eq!(f.derivative("y"), rf("-x^2", "y^2"));
    }

    #[test]
    fn substitution_guards_denominator() {
        let f = rf("1", "x - 1");
        assert!(f.substitute("x", &p("1")).is_err());
        assert_eq!(f.substitute("x", &p("y + 1")).unwrap(), rf("1", "y"));
    }
}
