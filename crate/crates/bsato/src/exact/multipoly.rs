//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are stored in a hash map from exponent vectors to nonzero
//! coefficients; iteration order is made deterministic by sorting on demand
//! (graded reverse lexicographic with respect to the name-sorted variable
//! list). Binary operations take the union of the operand variable sets, so
//! polynomials over different charts can be combined freely.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};

use crate::error::{Error, Result};

use super::parse;
use super::rational::{Rational, rational_gcd};

#[derive(Debug, Clone)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: HashMap<Box<[u32]>, Rational>,
}

impl PartialEq for MultiPoly {
    /// Equality as polynomials: variables that occur in no term are ignored.
    fn eq(&self, other: &Self) -> bool {
        if self.vars == other.vars {
            return self.terms == other.terms;
        }
        let a = self.compress_vars();
        let b = other.compress_vars();
        a.vars == b.vars && a.terms == b.terms
    }
}

impl Eq for MultiPoly {}

/// Graded reverse lexicographic comparison of exponent vectors of equal
/// length. Higher total degree wins; ties go to the vector whose trailing
/// entries are smaller.
pub fn cmp_grevlex(a: &[u32], b: &[u32]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    match da.cmp(&db) {
        Ordering::Equal => {}
        other => return other,
    }
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => {}
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

fn sorted_dedup(mut vars: Vec<String>) -> Vec<String> {
    vars.sort();
    vars.dedup();
    vars
}

/// All exponent vectors of length `n` summing to exactly `d`, largest first
/// entry first. `n = 0` yields the empty vector when `d = 0` and nothing
/// otherwise.
pub fn exponents_of_degree(n: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0u32; n];
    rec(0, d, &mut cur, &mut out);
    out
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly { vars: Vec::new(), terms: HashMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Box::from([]), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        Self::var_pow(name, 1)
    }

    pub fn var_pow(name: &str, e: u32) -> Self {
        let mut p = MultiPoly { vars: vec![name.to_string()], terms: HashMap::new() };
        if e == 0 {
            return Self::one();
        }
        p.terms.insert(Box::from([e]), Rational::one());
        p
    }

    /// Builds a polynomial over the given variables from (exponents, coeff)
    /// pairs; repeated monomials are summed, zero coefficients dropped.
    pub fn from_terms<I>(vars: Vec<String>, items: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let vars = sorted_dedup(vars);
        let mut terms: HashMap<Box<[u32]>, Rational> = HashMap::new();
        for (exps, c) in items {
            assert_eq!(exps.len(), vars.len(), "exponent arity mismatch");
            if c.is_zero() {
                continue;
            }
            let entry = terms.entry(exps.into_boxed_slice()).or_insert_with(Rational::zero);
            *entry += c;
        }
        terms.retain(|_, c| !c.is_zero());
        MultiPoly { vars, terms }
    }

    pub fn parse(src: &str) -> Result<Self> {
        parse::parse_poly(src)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The constant value if no variable occurs with positive exponent.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.iter().all(|&e| e == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// Re-indexes the terms into a variable superset. Panics if `new_vars`
    /// does not contain every variable actually used.
    pub fn embed(&self, new_vars: &[String]) -> Self {
        if self.vars == new_vars {
            return self.clone();
        }
        let map: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| new_vars.iter().position(|w| w == v))
            .collect();
        let mut terms = HashMap::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; new_vars.len()];
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    let j = map[i].unwrap_or_else(|| {
                        panic!("variable {} missing from target set", self.vars[i])
                    });
                    exps[j] = e;
                }
            }
            terms.insert(exps.into_boxed_slice(), c.clone());
        }
        MultiPoly { vars: new_vars.to_vec(), terms }
    }

    /// Union variable set of the two operands.
    pub fn joint_vars(&self, other: &Self) -> Vec<String> {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        sorted_dedup(vars)
    }

    /// Drops variables that appear in no term.
    pub fn compress_vars(&self) -> Self {
        let used: Vec<bool> = (0..self.vars.len())
            .map(|i| self.terms.keys().any(|m| m[i] > 0))
            .collect();
        if used.iter().all(|&u| u) {
            return self.clone();
        }
        let vars: Vec<String> = self
            .vars
            .iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(v, _)| v.clone())
            .collect();
        let mut terms = HashMap::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let exps: Vec<u32> = m
                .iter()
                .zip(&used)
                .filter(|(_, &u)| u)
                .map(|(&e, _)| e)
                .collect();
            terms.insert(exps.into_boxed_slice(), c.clone());
        }
        MultiPoly { vars, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let vars = self.joint_vars(other);
        let mut a = self.embed(&vars);
        let b = other.embed(&vars);
        for (m, c) in b.terms {
            let entry = a.terms.entry(m).or_insert_with(Rational::zero);
            *entry += c;
        }
        a.terms.retain(|_, c| !c.is_zero());
        a
    }

    pub fn neg(&self) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c = -c.clone();
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MultiPoly { vars: self.vars.clone(), terms: HashMap::new() };
        }
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v *= c;
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let vars = self.joint_vars(other);
        let a = self.embed(&vars);
        let b = other.embed(&vars);
        let mut terms: HashMap<Box<[u32]>, Rational> =
            HashMap::with_capacity(a.terms.len() * b.terms.len() / 2 + 1);
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let exps: Vec<u32> = ma.iter().zip(mb.iter()).map(|(&x, &y)| x + y).collect();
                let entry = terms.entry(exps.into_boxed_slice()).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        MultiPoly { vars, terms }
    }

    /// Multiplies by a single monomial in place of a full `mul`.
    pub fn mul_monomial(&self, exps: &[u32], c: &Rational) -> Self {
        debug_assert_eq!(exps.len(), self.vars.len());
        if c.is_zero() {
            return MultiPoly { vars: self.vars.clone(), terms: HashMap::new() };
        }
        let mut terms = HashMap::with_capacity(self.terms.len());
        for (m, v) in &self.terms {
            let e: Vec<u32> = m.iter().zip(exps.iter()).map(|(&x, &y)| x + y).collect();
            terms.insert(e.into_boxed_slice(), v * c);
        }
        MultiPoly { vars: self.vars.clone(), terms }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self, var: &str) -> Self {
        let Some(i) = self.var_index(var) else {
            return MultiPoly { vars: self.vars.clone(), terms: HashMap::new() };
        };
        let mut terms = HashMap::new();
        for (m, c) in &self.terms {
            let e = m[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.to_vec();
            exps[i] = e - 1;
            let entry = terms
                .entry(exps.into_boxed_slice())
                .or_insert_with(Rational::zero);
            *entry += c * Rational::from_integer(e.into());
        }
        terms.retain(|_, c: &mut Rational| !c.is_zero());
        MultiPoly { vars: self.vars.clone(), terms }
    }

    pub fn degree_in(&self, var: &str) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        let Some(i) = self.var_index(var) else {
            return Some(0);
        };
        Some(self.terms.keys().map(|m| m[i]).max().unwrap())
    }

    pub fn total_degree(&self) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        Some(
            self.terms
                .keys()
                .map(|m| m.iter().sum::<u32>())
                .max()
                .unwrap(),
        )
    }

    /// Dense coefficient list with respect to one variable: index k holds the
    /// coefficient of var^k as a polynomial in the remaining variables.
    pub fn coeffs_in(&self, var: &str) -> Vec<MultiPoly> {
        let deg = self.degree_in(var).unwrap_or(0) as usize;
        let rest: Vec<String> = self.vars.iter().filter(|v| *v != var).cloned().collect();
        let mut out =
            vec![MultiPoly { vars: rest.clone(), terms: HashMap::new() }; deg + 1];
        let vi = self.var_index(var);
        for (m, c) in &self.terms {
            let (k, exps): (u32, Vec<u32>) = match vi {
                Some(i) => (
                    m[i],
                    m.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, &e)| e)
                        .collect(),
                ),
                None => (0, m.to_vec()),
            };
            let entry = out[k as usize]
                .terms
                .entry(exps.into_boxed_slice())
                .or_insert_with(Rational::zero);
            *entry += c;
        }
        for p in &mut out {
            p.terms.retain(|_, c| !c.is_zero());
        }
        out
    }

    /// Inverse of `coeffs_in`: sum of coeffs[k] * var^k.
    pub fn from_coeffs_in(var: &str, coeffs: &[MultiPoly]) -> Self {
        let mut acc = MultiPoly::zero();
        let v = MultiPoly::var(var);
        for (k, c) in coeffs.iter().enumerate() {
            acc = acc.add(&c.mul(&v.pow(k as u32)));
        }
        acc
    }

    pub fn substitute(&self, var: &str, value: &Self) -> Self {
        let Some(_) = self.var_index(var) else {
            return self.clone();
        };
        let coeffs = self.coeffs_in(var);
        let mut acc = MultiPoly::zero();
        let mut power = MultiPoly::one();
        for c in coeffs {
            acc = acc.add(&c.mul(&power));
            power = power.mul(value);
        }
        acc
    }

    /// Substitutes values for every variable; all must be assigned.
    pub fn eval(&self, values: &HashMap<String, Rational>) -> Result<Rational> {
        for v in &self.vars {
            if self.terms.keys().any(|m| m[self.var_index(v).unwrap()] > 0)
                && !values.contains_key(v)
            {
                return Err(Error::Mismatch(format!("no value for variable {v}")));
            }
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    let base = &values[&self.vars[i]];
                    let mut p = Rational::one();
                    for _ in 0..e {
                        p *= base;
                    }
                    t *= p;
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Positive rational c with f/c integral and content-free; zero for the
    /// zero polynomial.
    pub fn content(&self) -> Rational {
        let mut acc = Rational::zero();
        for c in self.terms.values() {
            acc = rational_gcd(&acc, c);
        }
        acc
    }

    /// Terms sorted grevlex-descending.
    pub fn sorted_terms(&self) -> Vec<(&[u32], &Rational)> {
        let mut out: Vec<(&[u32], &Rational)> =
            self.terms.iter().map(|(m, c)| (m.as_ref(), c)).collect();
        out.sort_by(|a, b| cmp_grevlex(b.0, a.0));
        out
    }

    /// Leading (monomial, coefficient) under grevlex.
    pub fn leading(&self) -> Option<(Vec<u32>, Rational)> {
        self.terms
            .iter()
            .max_by(|a, b| cmp_grevlex(a.0, b.0))
            .map(|(m, c)| (m.to_vec(), c.clone()))
    }

    pub fn leading_coeff(&self) -> Rational {
        self.leading().map(|(_, c)| c).unwrap_or_else(Rational::zero)
    }

    /// Scales so the grevlex-leading coefficient is 1.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    /// Exact division; `None` when the divisor does not divide.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let vars = self.joint_vars(d);
        let mut rem = self.embed(&vars);
        let div = d.embed(&vars);
        let (dm, dc) = div.leading().unwrap();
        let mut quot = MultiPoly { vars: vars.clone(), terms: HashMap::new() };
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            if !dm.iter().zip(rm.iter()).all(|(&a, &b)| a <= b) {
                return None;
            }
            let qe: Vec<u32> = rm.iter().zip(dm.iter()).map(|(&a, &b)| a - b).collect();
            let qc = &rc / &dc;
            let entry = quot
                .terms
                .entry(qe.clone().into_boxed_slice())
                .or_insert_with(Rational::zero);
            *entry += qc.clone();
            rem = rem.sub(&div.mul_monomial(&qe, &qc));
        }
        quot.terms.retain(|_, c| !c.is_zero());
        Some(quot)
    }

    /// True when `d` divides `self` exactly.
    pub fn divisible_by(&self, d: &Self) -> bool {
        self.exact_div(d).is_some()
    }

    /// Pseudo-remainder of `self` by `d` with respect to `var`, normalized so
    /// that exactly lc(d)^(deg self - deg d + 1) * self = q*d + prem.
    pub(crate) fn prem(&self, d: &Self, var: &str) -> Self {
        let dd = d.degree_in(var).expect("prem by zero") as i64;
        let ds = match self.degree_in(var) {
            Some(ds) => ds as i64,
            None => return self.clone(),
        };
        if ds < dd {
            return self.clone();
        }
        let lc_d = d.coeffs_in(var).pop().unwrap();
        let mut r = self.clone();
        let mut steps_left = ds - dd + 1;
        loop {
            let Some(dr) = r.degree_in(var).map(|e| e as i64) else { break };
            if dr < dd || r.is_zero() {
                break;
            }
            let lc_r = r.coeffs_in(var).pop().unwrap();
            let shift = MultiPoly::var_pow(var, (dr - dd) as u32);
            r = r.mul(&lc_d).sub(&d.mul(&lc_r).mul(&shift));
            steps_left -= 1;
            if let Some(new_d) = r.degree_in(var) {
                assert!((new_d as i64) < dr, "pseudo-remainder failed to reduce");
            }
        }
        // Degree can drop by more than one per step; pad the scaling so the
        // subresultant bookkeeping downstream stays exact.
        for _ in 0..steps_left {
            r = r.mul(&lc_d);
        }
        r
    }

    /// Multivariate gcd via primitive subresultant remainder sequences,
    /// normalized to have grevlex-leading coefficient 1.
    pub fn gcd(&self, other: &Self) -> Self {
        let g = self.gcd_raw(other);
        g.monic()
    }

    fn gcd_raw(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.as_constant().is_some() || other.as_constant().is_some() {
            return MultiPoly::one();
        }
        let vars = self.joint_vars(other);
        let a = self.embed(&vars).compress_vars();
        let b = other.embed(&vars).compress_vars();
        if a.as_constant().is_some() || b.as_constant().is_some() {
            return MultiPoly::one();
        }
        // Fast path: monomial divisor.
        if a.terms.len() == 1 || b.terms.len() == 1 {
            return a.monomial_gcd(&b);
        }
        if a == b {
            return a;
        }
        if b.divisible_by(&a) {
            return a;
        }
        if a.divisible_by(&b) {
            return b;
        }
        if let Some(h) = Self::heuristic_gcd(&a, &b) {
            return h;
        }
        let var = a
            .vars
            .iter()
            .find(|v| b.vars.contains(v))
            .cloned()
            .unwrap_or_else(|| a.vars[0].clone());
        if !b.vars.contains(&var) || b.degree_in(&var) == Some(0) || a.degree_in(&var) == Some(0) {
            // No genuinely shared variable: only the contents can match.
            let ca = a.poly_content(&a.vars[0].clone());
            let cb = b.poly_content(&b.vars[0].clone());
            return ca.gcd_raw(&cb);
        }
        let (ca, pa) = a.content_and_primitive(&var);
        let (cb, pb) = b.content_and_primitive(&var);
        let cont = ca.gcd_raw(&cb);
        let mut f = pa;
        let mut g = pb;
        if f.degree_in(&var) < g.degree_in(&var) {
            std::mem::swap(&mut f, &mut g);
        }
        loop {
            let r = f.prem(&g, &var);
            if r.is_zero() {
                let (_, pg) = g.content_and_primitive(&var);
                return cont.mul(&pg);
            }
            if r.degree_in(&var) == Some(0) || !r.vars.contains(&var) {
                return cont;
            }
            let (_, pr) = r.content_and_primitive(&var);
            f = g;
            g = pr;
        }
    }

    /// Heuristic gcd by integer evaluation and balanced base-xi digit
    /// recovery, verified by trial division. `None` means the evaluation
    /// points ran out and the caller should fall back to remainder
    /// sequences.
    fn heuristic_gcd(a: &Self, b: &Self) -> Option<Self> {
        let vars = a.joint_vars(b);
        let f = a.embed(&vars).integer_primitive();
        let g = b.embed(&vars).integer_primitive();
        let k = vars.len();
        Self::heu_rec(&f, &g, k).map(|h| h.compress_vars())
    }

    /// Both inputs are nonzero integer polynomials over the same variable
    /// list; only the first `k` variables may still occur.
    fn heu_rec(f: &Self, g: &Self, k: usize) -> Option<Self> {
        if k == 0 {
            let fc = f.as_constant().expect("evaluated input is constant");
            let gc = g.as_constant().expect("evaluated input is constant");
            let c = rational_gcd(&fc, &gc);
            let exps = vec![0u32; f.vars.len()];
            let mut terms = HashMap::new();
            terms.insert(exps.into_boxed_slice(), c);
            return Some(MultiPoly { vars: f.vars.clone(), terms });
        }
        let x = k - 1;
        let df = f.degree_of_idx(x);
        let dg = g.degree_of_idx(x);
        if df == 0 && dg == 0 {
            return Self::heu_rec(f, g, k - 1);
        }
        let dmax = df.min(dg);
        let mut xi = BigInt::from(2) * f.int_height().min(g.int_height()) + 29;
        for _ in 0..6 {
            let fe = f.eval_idx_big(x, &xi);
            let ge = g.eval_idx_big(x, &xi);
            if fe.is_zero() || ge.is_zero() {
                xi = &xi * 73794 / 27011;
                continue;
            }
            let Some(gamma) = Self::heu_rec(&fe, &ge, k - 1) else {
                xi = &xi * 73794 / 27011;
                continue;
            };
            if let Some(h) = Self::digits_to_poly(gamma, x, dmax, &xi) {
                let h = h.integer_primitive();
                if f.divisible_by(&h) && g.divisible_by(&h) {
                    return Some(h);
                }
            }
            xi = &xi * 73794 / 27011;
        }
        None
    }

    /// Reads `gamma` as a balanced base-xi expansion whose digits become the
    /// coefficients of powers of variable `x`.
    fn digits_to_poly(gamma: Self, x: usize, dmax: u32, xi: &BigInt) -> Option<Self> {
        let mut h = MultiPoly { vars: gamma.vars.clone(), terms: HashMap::new() };
        let mut rest = gamma;
        let mut i: u32 = 0;
        while !rest.is_zero() {
            if i > dmax {
                return None;
            }
            let (digit, quo) = rest.balanced_split(xi);
            for (m, c) in digit.terms {
                let mut e = m.into_vec();
                e[x] = i;
                h.terms.insert(e.into_boxed_slice(), c);
            }
            rest = quo;
            i += 1;
        }
        if h.is_zero() { None } else { Some(h) }
    }

    /// Splits each integer coefficient c as c = q*xi + r with r balanced
    /// around zero, returning the digit part (the r's) and the quotient.
    fn balanced_split(&self, xi: &BigInt) -> (Self, Self) {
        let half = xi / 2;
        let mut dig = HashMap::new();
        let mut quo = HashMap::new();
        for (m, c) in &self.terms {
            let n = c.numer();
            let mut r = n.mod_floor(xi);
            if r > half {
                r -= xi;
            }
            let q = (n - &r) / xi;
            if !r.is_zero() {
                dig.insert(m.clone(), Rational::from_integer(r));
            }
            if !q.is_zero() {
                quo.insert(m.clone(), Rational::from_integer(q));
            }
        }
        (
            MultiPoly { vars: self.vars.clone(), terms: dig },
            MultiPoly { vars: self.vars.clone(), terms: quo },
        )
    }

    /// Divides by the rational content, leaving coprime integer coefficients.
    fn integer_primitive(&self) -> Self {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            self.clone()
        } else {
            self.scale(&c.recip())
        }
    }

    fn int_height(&self) -> BigInt {
        self.terms
            .values()
            .map(|c| c.numer().abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    fn degree_of_idx(&self, idx: usize) -> u32 {
        self.terms.keys().map(|m| m[idx]).max().unwrap_or(0)
    }

    /// Substitutes the integer `xi` for the variable at `idx`.
    fn eval_idx_big(&self, idx: usize, xi: &BigInt) -> Self {
        let mut pows: HashMap<u32, Rational> = HashMap::new();
        let mut terms: HashMap<Box<[u32]>, Rational> = HashMap::new();
        for (m, c) in &self.terms {
            let e = m[idx];
            let scaled = if e == 0 {
                c.clone()
            } else {
                let p = pows
                    .entry(e)
                    .or_insert_with(|| Rational::from_integer(xi.pow(e)));
                c * &*p
            };
            let mut key = m.to_vec();
            key[idx] = 0;
            let entry = terms
                .entry(key.into_boxed_slice())
                .or_insert_with(Rational::zero);
            *entry += scaled;
        }
        terms.retain(|_, c| !c.is_zero());
        MultiPoly { vars: self.vars.clone(), terms }
    }

    fn monomial_gcd(&self, other: &Self) -> Self {
        let vars = self.joint_vars(other);
        let a = self.embed(&vars);
        let b = other.embed(&vars);
        let mut exps = vec![u32::MAX; vars.len()];
        for m in a.terms.keys().chain(b.terms.keys()) {
            for (e, &me) in exps.iter_mut().zip(m.iter()) {
                *e = (*e).min(me);
            }
        }
        let mut p = MultiPoly { vars, terms: HashMap::new() };
        p.terms.insert(exps.into_boxed_slice(), Rational::one());
        p
    }

    /// Content with respect to `var`: gcd of the coefficient polynomials.
    fn poly_content(&self, var: &str) -> Self {
        let mut acc = MultiPoly::zero();
        for c in self.coeffs_in(var) {
            if c.is_zero() {
                continue;
            }
            acc = acc.gcd_raw(&c);
            if acc.as_constant().is_some() {
                return MultiPoly::one();
            }
        }
        acc
    }

    fn content_and_primitive(&self, var: &str) -> (Self, Self) {
        let cont = self.poly_content(var);
        let prim = self.exact_div(&cont).expect("content must divide");
        (cont, prim)
    }

    /// Largest k with d^k dividing self, together with self / d^k.
    pub fn remove_factor(&self, d: &Self) -> (u32, Self) {
        let mut k = 0;
        let mut cur = self.clone();
        loop {
            match cur.exact_div(d) {
                Some(q) => {
                    cur = q;
                    k += 1;
                }
                None => return (k, cur),
            }
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms = self.sorted_terms();
        for (i, (m, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut pieces: Vec<String> = Vec::new();
            let trivial = m.iter().all(|&e| e == 0);
            if !mag.is_one() || trivial {
                pieces.push(super::rational::format_rational(&mag));
            }
            for (j, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => pieces.push(self.vars[j].clone()),
                    _ => pieces.push(format!("{}^{}", self.vars[j], e)),
                }
            }
            write!(f, "{}", pieces.join("*"))?;
        }
        Ok(())
    }
}
