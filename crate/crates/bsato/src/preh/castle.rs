//! Castling moves on factored b-functions. A castling pair of spaces shares
//! its invariant theory, and the two b-functions differ by explicit products
//! of linear forms in the weighted exponent d.s: passing from the n1 side to
//! the n2 side multiplies by the n2-indexed product and divides by the
//! n1-indexed one.

use std::collections::BTreeMap;

use crate::bfun::{BFactor, FactoredB};
use crate::error::{Error, Result};
use crate::exact::Rational;

/// One castling move between spaces carrying GL_{n1} and GL_{n2} factors,
/// with determinant twist d, semi-invariant degrees degs = (d_1..d_l), and
/// exponent multiplicities mults = (m_1..m_l).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CastlingContext {
    n1: u32,
    n2: u32,
    d: i64,
    degs: Vec<u64>,
    mults: Vec<u64>,
}

impl CastlingContext {
    pub fn new(n1: u32, n2: u32, d: i64, degs: Vec<u64>, mults: Vec<u64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Mismatch("castling sides must be positive".into()));
        }
        if degs.is_empty() || degs.len() != mults.len() {
            return Err(Error::Mismatch(format!(
                "{} degrees against {} multiplicities",
                degs.len(),
                mults.len()
            )));
        }
        if degs.contains(&0) {
            return Err(Error::Mismatch("semi-invariant degrees must be positive".into()));
        }
        Ok(CastlingContext { n1, n2, d, degs, mults })
    }

    pub fn n1(&self) -> u32 {
        self.n1
    }

    pub fn n2(&self) -> u32 {
        self.n2
    }

    pub fn degs(&self) -> &[u64] {
        &self.degs
    }

    /// The same move read in the opposite direction.
    pub fn inverse(&self) -> Self {
        CastlingContext {
            n1: self.n2,
            n2: self.n1,
            d: self.d,
            degs: self.degs.clone(),
            mults: self.mults.clone(),
        }
    }

    /// The inner product degs . mults, the common range bound of both
    /// products.
    fn weighted_mult(&self) -> u64 {
        self.degs.iter().zip(&self.mults).map(|(a, b)| a * b).sum()
    }
}

/// Transforms a factored b across one castling move: multiplies by the
/// product of (degs.s + d + i + j) over i = 1..n2, j = 0..degs.mults - 1,
/// and divides exactly by the same product with i = 1..n1. Division failing
/// means the input b does not belong to the n1 side of this move.
///
/// Every linear form is renormalized to a gcd-1 slope vector, with the
/// extracted integer content folded into the scalar.
pub fn castle_transform(b: &FactoredB, ctx: &CastlingContext) -> Result<FactoredB> {
    let l = ctx.degs.len();
    if b.num_vars() != 0 && b.num_vars() != l {
        return Err(Error::Mismatch(format!(
            "b ranges over {} exponent variables, context over {l}",
            b.num_vars()
        )));
    }

    let mut counts: BTreeMap<(Vec<u64>, Rational), i64> = BTreeMap::new();
    for f in b.factors() {
        counts.insert((f.gamma().to_vec(), f.alpha().clone()), f.mult() as i64);
    }

    let g = ctx.degs.iter().fold(0u64, |acc, &v| gcd(acc, v));
    let slope: Vec<u64> = ctx.degs.iter().map(|&v| v / g).collect();
    let dm = ctx.weighted_mult();
    let mut scalar = b.scalar().clone();
    let g_rat = Rational::from_integer((g as i64).into());

    let mut stack = |n: u32, sign: i64, scalar: &mut Rational| {
        for i in 1..=n as i64 {
            for j in 0..dm as i64 {
                let alpha = Rational::from_integer((ctx.d + i + j).into()) / g_rat.clone();
                *counts.entry((slope.clone(), alpha)).or_insert(0) += sign;
                if sign > 0 {
                    *scalar = scalar.clone() * g_rat.clone();
                } else {
                    *scalar = scalar.clone() / g_rat.clone();
                }
            }
        }
    };
    stack(ctx.n2, 1, &mut scalar);
    stack(ctx.n1, -1, &mut scalar);

    let mut factors = Vec::new();
    for ((gamma, alpha), mult) in counts {
        if mult < 0 {
            return Err(Error::NotDivisible(format!(
                "b lacks the factor ({}) required by the move",
                describe(&gamma, &alpha)
            )));
        }
        if mult > 0 {
            factors.push(BFactor::new(gamma, alpha, mult as u32)?);
        }
    }
    FactoredB::new(scalar, factors)
}

fn describe(gamma: &[u64], alpha: &Rational) -> String {
    let slope = gamma
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(k, &c)| if c == 1 { format!("s{}", k + 1) } else { format!("{c}*s{}", k + 1) })
        .collect::<Vec<_>>()
        .join(" + ");
    format!("{slope} + {alpha}")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    fn paramb1() -> FactoredB {
        FactoredB::univariate(
            Rational::one(),
            &[
                (rat_int(1), 4),
                (rat(3, 2), 4),
                (rat(5, 6), 2),
                (rat(7, 6), 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn equal_sides_change_nothing() {
        let ctx = CastlingContext::new(3, 3, 2, vec![6], vec![1]).unwrap();
        let b = paramb1();
        assert_eq!(castle_transform(&b, &ctx).unwrap(), b);
    }

    #[test]
    fn the_two_to_four_move_appends_twelve_roots() {
        let ctx = CastlingContext::new(2, 4, 2, vec![6], vec![1]).unwrap();
        let out = castle_transform(&paramb1(), &ctx).unwrap();
        // The appended factor is prod_{i=5..6} prod_{j=0..5} (s + (i+j)/6),
        // written against slope 6 before normalization.
        let mut parts = vec![
            (rat_int(1), 4),
            (rat(3, 2), 4),
            (rat(5, 6), 2),
            (rat(7, 6), 2),
        ];
        for i in 5..=6 {
            for j in 0..=5 {
                parts.push((rat(i + j, 6), 1));
            }
        }
        let expected = FactoredB::univariate(rat_int(6).pow(12), &parts).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn round_trip_restores_the_input() {
        let ctx = CastlingContext::new(2, 4, 2, vec![6], vec![1]).unwrap();
        let b = paramb1();
        let there = castle_transform(&b, &ctx).unwrap();
        let back = castle_transform(&there, &ctx.inverse()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn missing_factors_are_reported() {
        // Dividing by the i=1..2 product requires roots the input lacks.
        let ctx = CastlingContext::new(2, 1, 0, vec![2], vec![1]).unwrap();
        let b = FactoredB::univariate(Rational::one(), &[(rat_int(1), 1)]).unwrap();
        match castle_transform(&b, &ctx) {
            Err(Error::NotDivisible(_)) => {}
            other => panic!("want NotDivisible, got {other:?}"),
        }
    }

    #[test]
    fn multi_weight_moves_keep_slopes_normalized() {
        let ctx = CastlingContext::new(1, 2, 1, vec![2, 4], vec![1, 0]).unwrap();
        let b = FactoredB::new(Rational::one(), Vec::new()).unwrap();
        let out = castle_transform(&b, &ctx).unwrap();
        // d.m = 2, so i=2 contributes j=0,1: forms (2s1+4s2+3+j)/1 with
        // slope gcd 2: (s1+2s2+3/2), (s1+2s2+2), each with content 2.
        let expected = FactoredB::new(
            rat_int(4),
            vec![
                BFactor::new(vec![1, 2], rat(3, 2), 1).unwrap(),
                BFactor::new(vec![1, 2], rat_int(2), 1).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn context_validation() {
        assert!(CastlingContext::new(0, 1, 0, vec![1], vec![1]).is_err());
        assert!(CastlingContext::new(1, 1, 0, vec![], vec![]).is_err());
        assert!(CastlingContext::new(1, 1, 0, vec![1, 0], vec![1, 1]).is_err());
        assert!(CastlingContext::new(1, 1, 0, vec![1], vec![1, 2]).is_err());
    }
}
