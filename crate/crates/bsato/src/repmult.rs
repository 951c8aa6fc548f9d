//! GL(2) multiplicity counting for symmetric powers of symmetric powers.
//!
//! The weight multiplicities of Sym^m(Sym^n C^2) are the coefficients of the
//! Gaussian binomial [m+n choose n]_q, and isotypic multiplicities are
//! consecutive differences of those coefficients. That is enough to answer
//! every multiplicity question this crate needs about binary forms; nothing
//! here knows about groups other than GL(2).

use num::BigInt;

use crate::error::{Error, Result};
use crate::exact::binomial;

/// The polynomial [m+n choose n]_q with exact integer coefficients.
///
/// `coefficient(k)` counts partitions of `k` inside an m-by-n box, so the
/// list is palindromic of degree m*n and every entry in range is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QBinomial {
    m: u32,
    n: u32,
    coefficients: Vec<u64>,
}

impl QBinomial {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Coefficient of q^k; zero outside the degree range.
    pub fn coefficient(&self, k: u32) -> u64 {
        self.coefficients.get(k as usize).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.m * self.n
    }

    pub fn is_palindromic(&self) -> bool {
        let c = &self.coefficients;
        (0..c.len() / 2).all(|i| c[i] == c[c.len() - 1 - i])
    }
}

impl std::fmt::Display for QBinomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (k, &c) in self.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match (c, k) {
                (c, 0) => write!(f, "{c}")?,
                (1, 1) => f.write_str("q")?,
                (1, k) => write!(f, "q^{k}")?,
                (c, 1) => write!(f, "{c}*q")?,
                (c, k) => write!(f, "{c}*q^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// [m+n choose n]_q by the q-Pascal recurrence
/// [a choose b]_q = [a-1 choose b-1]_q + q^b [a-1 choose b]_q.
pub fn gauss_binomial(m: u32, n: u32) -> QBinomial {
    let a_max = m + n;
    // row[b] holds [a choose b]_q for the current a.
    let mut row: Vec<Vec<u64>> = vec![vec![1]];
    for a in 1..=a_max {
        let top = a.min(n);
        let mut next: Vec<Vec<u64>> = Vec::with_capacity(top as usize + 1);
        for b in 0..=top {
            if b == 0 || b == a {
                next.push(vec![1]);
                continue;
            }
            let mut c = vec![0u64; (b * (a - b)) as usize + 1];
            for (k, &v) in row[b as usize - 1].iter().enumerate() {
                c[k] += v;
            }
            if let Some(r) = row.get(b as usize) {
                for (k, &v) in r.iter().enumerate() {
                    c[k + b as usize] += v;
                }
            }
            next.push(c);
        }
        row = next;
    }
    QBinomial {
        m,
        n,
        coefficients: row.swap_remove(n as usize),
    }
}

/// Multiplicity of the irreducible of highest weight (a, b), a >= b, in
/// Sym^m(Sym^n C^2): zero unless a + b = m*n, otherwise the difference of
/// the q-binomial coefficients at b and b-1.
pub fn sym_sym_multiplicity(m: u32, n: u32, weight: (u32, u32)) -> Result<u64> {
    let (a, b) = weight;
    if a < b {
        return Err(Error::Mismatch(format!(
            "({a}, {b}) is not dominant: first entry must be largest"
        )));
    }
    if a + b != m * n {
        return Ok(0);
    }
    let q = gauss_binomial(m, n);
    let high = q.coefficient(b);
    let low = if b == 0 { 0 } else { q.coefficient(b - 1) };
    Ok(high
        .checked_sub(low)
        .expect("q-binomial coefficients rise to the middle"))
}

/// Multiplicity of the weight (a, b) irreducible anywhere in the coordinate
/// ring of binary n-forms. The polynomial degree is forced by the weight:
/// only degree (a+b)/n can contribute.
pub fn coordinate_ring_multiplicity(n: u32, weight: (u32, u32)) -> Result<u64> {
    let (a, b) = weight;
    if a < b {
        return Err(Error::Mismatch(format!(
            "({a}, {b}) is not dominant: first entry must be largest"
        )));
    }
    if n == 0 {
        return Ok(u64::from(a == 0 && b == 0));
    }
    let total = a + b;
    if total % n != 0 {
        return Ok(0);
    }
    sym_sym_multiplicity(total / n, n, weight)
}

/// True when the weight lambda + k*sigma appears exactly once in the
/// coordinate ring of binary n-forms.
pub fn multiplicity_free_check(
    n: u32,
    lambda: (u32, u32),
    sigma: (u32, u32),
    k: u32,
) -> Result<bool> {
    let w = (lambda.0 + k * sigma.0, lambda.1 + k * sigma.1);
    if w.0 < w.1 {
        return Ok(false);
    }
    Ok(coordinate_ring_multiplicity(n, w)? == 1)
}

/// dim Sym^m(Sym^n C^2) = C(m+n, n).
pub fn sym_sym_dimension(m: u32, n: u32) -> BigInt {
    binomial(m + n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force count of weight-(mn-k, k) monomials: multisets of size m
    /// drawn from {0..n} with entry sum k.
    fn box_count(m: u32, n: u32, k: u32) -> u64 {
        fn rec(m: u32, max: u32, k: u32) -> u64 {
            if m == 0 {
                return u64::from(k == 0);
            }
            (0..=max.min(k))
                .map(|first| rec(m - 1, first, k - first))
                .sum()
        }
        rec(m, n, k)
    }

    #[test]
    fn small_gauss_binomials_match_hand_values() {
        assert_eq!(gauss_binomial(1, 1).coefficients(), &[1, 1]);
        assert_eq!(gauss_binomial(2, 2).coefficients(), &[1, 1, 2, 1, 1]);
        assert_eq!(gauss_binomial(0, 5).coefficients(), &[1]);
        assert_eq!(gauss_binomial(5, 0).coefficients(), &[1]);
    }

    #[test]
    fn coefficients_count_box_partitions() {
        for (m, n) in [(2u32, 2u32), (3, 2), (2, 3), (4, 3), (3, 4)] {
            let q = gauss_binomial(m, n);
            assert_eq!(q.degree() as usize + 1, q.coefficients().len());
            for k in 0..=q.degree() {
                assert_eq!(q.coefficient(k), box_count(m, n, k), "m={m} n={n} k={k}");
            }
        }
    }

    #[test]
    fn palindromy_and_positivity() {
        for m in 0..=7u32 {
            for n in 0..=7u32 {
                let q = gauss_binomial(m, n);
                assert!(q.is_palindromic(), "m={m} n={n}");
                assert!(q.coefficients().iter().all(|&c| c > 0), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn unimodality_up_to_the_middle() {
        for m in 0..=8u32 {
            for n in 0..=8u32 {
                let q = gauss_binomial(m, n);
                let c = q.coefficients();
                for i in 1..=c.len() / 2 {
                    assert!(c[i] >= c[i - 1], "m={m} n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn hermite_reciprocity() {
        for m in 0..=6u32 {
            for n in 0..=6u32 {
                assert_eq!(
                    gauss_binomial(m, n).coefficients(),
                    gauss_binomial(n, m).coefficients()
                );
            }
        }
    }

    #[test]
    fn multiplicities_on_the_two_by_two_case() {
        assert_eq!(sym_sym_multiplicity(2, 2, (4, 0)).unwrap(), 1);
        assert_eq!(sym_sym_multiplicity(2, 2, (2, 2)).unwrap(), 1);
        assert_eq!(sym_sym_multiplicity(2, 2, (3, 1)).unwrap(), 0);
        // Wrong total weight short-circuits to zero.
        assert_eq!(sym_sym_multiplicity(2, 2, (3, 0)).unwrap(), 0);
        assert!(sym_sym_multiplicity(2, 2, (1, 3)).is_err());
    }

    #[test]
    fn first_symmetric_power_is_the_representation_itself() {
        for n in 1..=9u32 {
            assert_eq!(sym_sym_multiplicity(1, n, (n, 0)).unwrap(), 1);
        }
    }

    #[test]
    fn subdominant_weight_vanishes_in_every_degree() {
        for n in 3..=12u32 {
            assert_eq!(
                coordinate_ring_multiplicity(n, (n - 1, 1)).unwrap(),
                0,
                "n={n}"
            );
        }
    }

    #[test]
    fn dimension_identity() {
        for m in 0..=6u32 {
            for n in 0..=6u32 {
                let mut acc = BigInt::from(0);
                let total = m * n;
                for b in 0..=total / 2 {
                    let a = total - b;
                    let mult = sym_sym_multiplicity(m, n, (a, b)).unwrap();
                    acc += BigInt::from(mult) * BigInt::from(a - b + 1);
                }
                assert_eq!(acc, sym_sym_dimension(m, n), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn cubic_invariant_line_is_multiplicity_free() {
        // Degree four in the coefficients of a binary cubic: weight (6, 6).
        assert_eq!(coordinate_ring_multiplicity(3, (6, 6)).unwrap(), 1);
        assert!(multiplicity_free_check(3, (0, 0), (3, 3), 2).unwrap());
        // Weight (2, 1) never appears.
        assert_eq!(coordinate_ring_multiplicity(3, (2, 1)).unwrap(), 0);
        assert!(!multiplicity_free_check(3, (2, 1), (0, 0), 1).unwrap());
        // Constants.
        assert_eq!(coordinate_ring_multiplicity(3, (0, 0)).unwrap(), 1);
        assert!(multiplicity_free_check(3, (0, 0), (0, 0), 0).unwrap());
    }

    #[test]
    fn display_reads_like_a_polynomial() {
        assert_eq!(gauss_binomial(2, 2).to_string(), "1 + q + 2*q^2 + q^3 + q^4");
        assert_eq!(gauss_binomial(1, 1).to_string(), "1 + q");
        assert_eq!(gauss_binomial(0, 0).to_string(), "1");
    }
}
