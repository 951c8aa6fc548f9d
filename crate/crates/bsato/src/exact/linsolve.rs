//! Parametric linear solving by fraction-free elimination.
//!
//! Entries may involve symbolic parameters; whenever elimination pivots on a
//! nonconstant polynomial, that polynomial is recorded as a side condition
//! (assumed nonzero) instead of being silently inverted.


use crate::error::{Error, Result};

use super::multipoly::MultiPoly;
use super::ratfunc::RatFunc;
use super::rational::Rational;

/// A polynomial in the parameters that the reported solution assumes to be
/// nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SideCondition {
    pub nonzero: MultiPoly,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    /// One solution of A x = b, with every free unknown set to zero.
    pub particular: Vec<RatFunc>,
    /// Basis of the solution space of A x = 0, one vector per free unknown.
    pub nullspace: Vec<Vec<RatFunc>>,
    pub side_conditions: Vec<SideCondition>,
}

/// Outcome of a parametric solve. Inconsistency is data, not a panic: the
/// witness row is the reduced equation 0 = c with c nonzero under the side
/// conditions.
#[derive(Debug, Clone)]
pub enum LinearOutcome {
    Solved(LinearSolution),
    Inconsistent { witness: MultiPoly, side_conditions: Vec<SideCondition> },
}

impl LinearOutcome {
    pub fn solution(self) -> Result<LinearSolution> {
        match self {
            LinearOutcome::Solved(s) => Ok(s),
            LinearOutcome::Inconsistent { witness, .. } => Err(Error::Inconsistent(format!(
                "reduced to 0 = {witness}"
            ))),
        }
    }
}

/// Solves A x = b over the rational function field of the parameters.
///
/// `matrix` is row-major with `rhs.len() == matrix.len()`; rows may be empty
/// only if the system has zero equations. Elimination works on canonically
/// reduced rational functions, so sparse systems stay sparse and entries stay
/// as small as their gcd-reduced form allows.
pub fn solve_linear_param(matrix: &[Vec<RatFunc>], rhs: &[RatFunc]) -> Result<LinearOutcome> {
    if matrix.len() != rhs.len() {
        return Err(Error::Mismatch(format!(
            "{} rows vs {} right-hand sides",
            matrix.len(),
            rhs.len()
        )));
    }
    let ncols = matrix.first().map(|r| r.len()).unwrap_or(0);
    if matrix.iter().any(|r| r.len() != ncols) {
        return Err(Error::Mismatch("ragged matrix".into()));
    }

    // The augmented column sits at index ncols.
    let mut rows: Vec<Vec<RatFunc>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut v = row.to_vec();
            v.push(b.clone());
            v
        })
        .collect();

    let mut side_conditions: Vec<SideCondition> = Vec::new();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col) in elimination order
    let mut rank = 0usize;

    for col in 0..ncols {
        // Deterministic pivot choice: constants first, then smallest combined
        // degree, then fewest numerator terms, then smallest row index.
        let mut best: Option<(bool, u32, usize, usize)> = None;
        for (i, row) in rows.iter().enumerate().skip(rank) {
            let e = &row[col];
            if e.is_zero() {
                continue;
            }
            let is_const = e.as_constant().is_some();
            let deg = e.num().total_degree().unwrap_or(0) + e.den().total_degree().unwrap_or(0);
            let key = (!is_const, deg, e.num().num_terms(), i);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let Some((_, _, _, pivot_row)) = best else { continue };
        rows.swap(rank, pivot_row);
        let pivot = rows[rank][col].clone();
        if pivot.as_constant().is_none() {
            let record = pivot.num().monic();
            if !side_conditions.iter().any(|c| c.nonzero == record) {
                side_conditions.push(SideCondition { nonzero: record });
            }
        }
        for i in (rank + 1)..rows.len() {
            if rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].div(&pivot)?;
            for j in (col + 1)..=ncols {
                if rows[rank][j].is_zero() {
                    continue;
                }
                let delta = factor.mul(&rows[rank][j]);
                rows[i][j] = rows[i][j].sub(&delta);
            }
            rows[i][col] = RatFunc::zero();
        }
        pivots.push((rank, col));
        rank += 1;
    }

    // Inconsistency: a zeroed coefficient row with nonzero augmented entry.
    for row in rows.iter().skip(rank) {
        if row[..ncols].iter().all(|e| e.is_zero()) && !row[ncols].is_zero() {
            return Ok(LinearOutcome::Inconsistent {
                witness: row[ncols].num().clone(),
                side_conditions,
            });
        }
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();

    // Rows are in echelon form; substitute from the last pivot upward.
    let solve_with = |augmented: &dyn Fn(usize) -> RatFunc,
                      free_values: &dyn Fn(usize) -> RatFunc|
     -> Result<Vec<RatFunc>> {
        let mut x = vec![RatFunc::zero(); ncols];
        for &c in &free_cols {
            x[c] = free_values(c);
        }
        for &(r, c) in pivots.iter().rev() {
            let mut acc = augmented(r);
            for j in (c + 1)..ncols {
                if rows[r][j].is_zero() || x[j].is_zero() {
                    continue;
                }
                acc = acc.sub(&x[j].mul(&rows[r][j]));
            }
            x[c] = acc.div(&rows[r][c])?;
        }
        Ok(x)
    };

    let particular = solve_with(
        &|r| rows[r][ncols].clone(),
        &|_| RatFunc::zero(),
    )?;
    let mut nullspace = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let v = solve_with(&|_| RatFunc::zero(), &|c| {
            if c == fc { RatFunc::one() } else { RatFunc::zero() }
        })?;
        nullspace.push(v);
    }

    Ok(LinearOutcome::Solved(LinearSolution {
        particular,
        nullspace,
        side_conditions,
    }))
}

/// Convenience wrapper for systems whose entries are plain rationals.
pub fn solve_linear_rational(
    matrix: &[Vec<Rational>],
    rhs: &[Rational],
) -> Result<LinearOutcome> {
    let m: Vec<Vec<RatFunc>> = matrix
        .iter()
        .map(|r| r.iter().map(|c| RatFunc::from_rational(c.clone())).collect())
        .collect();
    let b: Vec<RatFunc> = rhs.iter().map(|c| RatFunc::from_rational(c.clone())).collect();
    solve_linear_param(&m, &b)
}
