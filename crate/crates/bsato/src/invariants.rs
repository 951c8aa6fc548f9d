//! Reduction of constant-coefficient operators to the quotient chart of a
//! family of algebraically independent invariants.
//!
//! Given homogeneous invariants d_1..d_k on an ambient affine space, the
//! subring Q[d_1..d_k] is a polynomial ring in quotient coordinates t_1..t_k.
//! A constant-coefficient operator that preserves the subring then induces an
//! operator with polynomial coefficients on the t-side; [`reduce_dual_operator`]
//! constructs that induced operator by matching its action on low monomials,
//! and [`reduce_conjugated`] does the same for the action twisted by a fixed
//! polynomial. [`compose_commuting`] substitutes such operators into a
//! polynomial, which is well defined as long as the operators that actually
//! meet in a term commute.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bfun::dual_invariant;
use crate::error::{Error, Result};
use crate::exact::{
    solve_linear_rational, LinearOutcome, MultiPoly, Rational,
};
use crate::weyl::WeylElement;

/// Seed for the random evaluation points of the Jacobian rank check. Fixed so
/// that repeated runs, including CLI runs, see the same witnesses.
const JACOBIAN_SEED: u64 = 0xB5A7_0D0A_11CE;

/// A family of homogeneous invariants together with the names of the
/// quotient-side coordinates, one per invariant.
#[derive(Debug, Clone)]
pub struct InvariantSystem {
    ambient: Vec<String>,
    invariants: Vec<MultiPoly>,
    degrees: Vec<u32>,
    quotient: Vec<String>,
}

impl InvariantSystem {
    /// Builds a system from ambient variable names, the invariants, and the
    /// quotient coordinate names. Every invariant must be a nonzero
    /// homogeneous polynomial of positive degree in the ambient variables,
    /// and there may be at most as many invariants as ambient variables.
    pub fn new(
        ambient: Vec<String>,
        invariants: Vec<MultiPoly>,
        quotient: Vec<String>,
    ) -> Result<Self> {
        let mut sorted = ambient;
        sorted.sort();
        let before = sorted.len();
        sorted.dedup();
        if sorted.len() != before {
            return Err(Error::Mismatch("duplicate ambient variable".into()));
        }
        if invariants.is_empty() {
            return Err(Error::Mismatch("no invariants given".into()));
        }
        if invariants.len() > sorted.len() {
            return Err(Error::Mismatch(format!(
                "{} invariants on {} ambient variables cannot be independent",
                invariants.len(),
                sorted.len()
            )));
        }
        if quotient.len() != invariants.len() {
            return Err(Error::Mismatch(format!(
                "{} quotient names for {} invariants",
                quotient.len(),
                invariants.len()
            )));
        }
        {
            let mut q = quotient.clone();
            q.sort();
            q.dedup();
            if q.len() != quotient.len() {
                return Err(Error::Mismatch("duplicate quotient variable".into()));
            }
            if q.iter().any(|t| sorted.binary_search(t).is_ok()) {
                return Err(Error::Mismatch(
                    "quotient names must not collide with ambient names".into(),
                ));
            }
        }
        let mut degrees = Vec::with_capacity(invariants.len());
        for d in &invariants {
            for v in d.vars() {
                if d.degree_in(v).unwrap_or(0) > 0 && sorted.binary_search(v).is_err() {
                    return Err(Error::Mismatch(format!(
                        "invariant uses unknown variable {v}"
                    )));
                }
            }
            let deg = homogeneous_degree(d).ok_or_else(|| {
                Error::Mismatch(format!("invariant {d} is not homogeneous"))
            })?;
            if deg == 0 {
                return Err(Error::Mismatch("constant invariants are not allowed".into()));
            }
            degrees.push(deg);
        }
        Ok(InvariantSystem {
            ambient: sorted,
            invariants,
            degrees,
            quotient,
        })
    }

    /// Same as [`InvariantSystem::new`] with quotient names t1..tk.
    pub fn with_default_names(ambient: Vec<String>, invariants: Vec<MultiPoly>) -> Result<Self> {
        let quotient = (1..=invariants.len()).map(|i| format!("t{i}")).collect();
        Self::new(ambient, invariants, quotient)
    }

    /// Reads the file format used by the CLI: the first meaningful line lists
    /// the ambient variables (whitespace or comma separated), every following
    /// line is one invariant. Lines that are empty or start with `#` are
    /// skipped.
    pub fn from_text(src: &str) -> Result<Self> {
        let mut lines = src
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head = lines
            .next()
            .ok_or_else(|| Error::Parse("empty invariant-system file".into()))?;
        let ambient: Vec<String> = head
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        let mut invariants = Vec::new();
        for line in lines {
            invariants.push(MultiPoly::parse(line)?);
        }
        Self::with_default_names(ambient, invariants)
    }

    pub fn ambient(&self) -> &[String] {
        &self.ambient
    }

    pub fn invariants(&self) -> &[MultiPoly] {
        &self.invariants
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn quotient(&self) -> &[String] {
        &self.quotient
    }

    /// t^mu as a polynomial in the quotient coordinates, with mu indexed like
    /// the invariant list.
    fn t_monomial(&self, mu: &[u32]) -> MultiPoly {
        let mut acc = MultiPoly::one();
        for (name, &e) in self.quotient.iter().zip(mu) {
            if e > 0 {
                acc = acc.mul(&MultiPoly::var_pow(name, e));
            }
        }
        acc
    }

    /// d^mu expanded in the ambient variables, served from a power cache.
    fn d_power(&self, mu: &[u32], cache: &mut PowerCache) -> MultiPoly {
        let mut acc = MultiPoly::one();
        for (j, &e) in mu.iter().enumerate() {
            if e > 0 {
                acc = acc.mul(cache.power(&self.invariants[j], j, e));
            }
        }
        acc.embed(&self.ambient)
    }
}

/// Total degree when all terms share it.
fn homogeneous_degree(p: &MultiPoly) -> Option<u32> {
    let mut deg = None;
    for (mono, _) in p.sorted_terms() {
        let d: u32 = mono.iter().sum();
        match deg {
            None => deg = Some(d),
            Some(e) if e == d => {}
            Some(_) => return None,
        }
    }
    deg
}

/// Per-invariant power ladder, grown on demand.
struct PowerCache {
    ladders: Vec<Vec<MultiPoly>>,
}

impl PowerCache {
    fn new(k: usize) -> Self {
        PowerCache {
            ladders: (0..k).map(|_| vec![MultiPoly::one()]).collect(),
        }
    }

    fn power(&mut self, base: &MultiPoly, j: usize, e: u32) -> &MultiPoly {
        let ladder = &mut self.ladders[j];
        while ladder.len() <= e as usize {
            let next = ladder.last().expect("nonempty ladder").mul(base);
            ladder.push(next);
        }
        &ladder[e as usize]
    }
}

/// All exponent tuples mu (indexed like `weights`) with
/// sum(mu_j * weights_j) equal to `total`.
fn weighted_exponents(weights: &[u32], total: u32) -> Vec<Vec<u32>> {
    fn rec(weights: &[u32], i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == weights.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = weights[i];
        let max = left / w;
        for e in (0..=max).rev() {
            cur[i] = e;
            rec(weights, i + 1, left - e * w, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; weights.len()];
    rec(weights, 0, total, &mut cur, &mut out);
    out
}

/// Exponent tuples of plain total degree `0..=bound`, ordered by degree.
fn exponents_upto(n: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=bound {
        out.extend(crate::exact::exponents_of_degree(n, d));
    }
    out
}

/// Rank of a rational matrix by straightforward elimination.
fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut at = 0;
    for col in 0..cols {
        let Some(pivot) = (at..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(at, pivot);
        let inv = rows[at][col].clone().recip();
        for r in (at + 1)..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone() * inv.clone();
            for c in col..cols {
                let delta = rows[at][c].clone() * factor.clone();
                rows[r][c] = rows[r][c].clone() - delta;
            }
        }
        rank += 1;
        at += 1;
        if at == rows.len() {
            break;
        }
    }
    rank
}

/// Probabilistic certificate of algebraic independence: the Jacobian of the
/// invariants is evaluated at up to three random 64-bit rational points, and
/// any full-rank witness proves independence. A return of `false` is only
/// evidence, not proof, of dependence.
pub fn check_alg_independent(sys: &InvariantSystem) -> bool {
    let k = sys.invariants.len();
    let jacobian: Vec<Vec<MultiPoly>> = sys
        .invariants
        .iter()
        .map(|d| sys.ambient.iter().map(|v| d.derivative(v)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(JACOBIAN_SEED);
    for _ in 0..3 {
        let mut point = HashMap::new();
        for v in &sys.ambient {
            point.insert(v.clone(), Rational::from_integer(rng.gen::<i64>().into()));
        }
        let mut rows = Vec::with_capacity(k);
        for row in &jacobian {
            let vals: std::result::Result<Vec<Rational>, Error> =
                row.iter().map(|e| e.eval(&point)).collect();
            match vals {
                Ok(r) => rows.push(r),
                Err(_) => return false,
            }
        }
        if rational_rank(rows) == k {
            return true;
        }
    }
    false
}

/// Writes `p` as a polynomial in the invariants, returned in the quotient
/// coordinates. Works one homogeneous component at a time; each component is
/// matched by an exact linear solve against the products d^mu of the right
/// weighted degree.
pub fn subring_express(p: &MultiPoly, sys: &InvariantSystem) -> Result<MultiPoly> {
    for v in p.vars() {
        if p.degree_in(v).unwrap_or(0) > 0 && sys.ambient.binary_search(v).is_err() {
            return Err(Error::NotInSubring(format!(
                "{v} is not an ambient variable of the system"
            )));
        }
    }
    let embedded = p.embed(&sys.ambient);
    let mut components: BTreeMap<u32, MultiPoly> = BTreeMap::new();
    for (mono, c) in embedded.sorted_terms() {
        let d: u32 = mono.iter().sum();
        let entry = components.entry(d).or_insert_with(MultiPoly::zero);
        *entry = entry.add(&MultiPoly::one().embed(&sys.ambient).mul_monomial(mono, c));
    }
    let mut cache = PowerCache::new(sys.invariants.len());
    let mut result = MultiPoly::zero();
    for (deg, component) in components {
        let mus = weighted_exponents(&sys.degrees, deg);
        if mus.is_empty() {
            return Err(Error::NotInSubring(format!(
                "no invariant monomial reaches degree {deg}"
            )));
        }
        let products: Vec<MultiPoly> =
            mus.iter().map(|mu| sys.d_power(mu, &mut cache)).collect();
        let mut row_of: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for q in products.iter().chain(std::iter::once(&component)) {
            for (mono, _) in q.sorted_terms() {
                let next = row_of.len();
                row_of.entry(mono.to_vec()).or_insert(next);
            }
        }
        let mut matrix = vec![vec![Rational::zero(); mus.len()]; row_of.len()];
        let mut rhs = vec![Rational::zero(); row_of.len()];
        for (col, q) in products.iter().enumerate() {
            for (mono, c) in q.sorted_terms() {
                matrix[row_of[mono]][col] = c.clone();
            }
        }
        for (mono, c) in component.sorted_terms() {
            rhs[row_of[mono]] = c.clone();
        }
        let LinearOutcome::Solved(sol) = solve_linear_rational(&matrix, &rhs)? else {
            return Err(Error::NotInSubring(format!(
                "the degree-{deg} component is not a polynomial in the invariants"
            )));
        };
        for (mu, c) in mus.iter().zip(&sol.particular) {
            let v = c
                .as_constant()
                .ok_or_else(|| Error::Mismatch("parameter leaked into a rational solve".into()))?;
            if !v.is_zero() {
                result = result.add(&sys.t_monomial(mu).scale(&v));
            }
        }
    }
    Ok(result)
}

/// Coefficient-monomial pools for the ansatz, from the tightest to the
/// spec-level fallback bound.
enum AnsatzTier {
    /// Weighted-homogeneous slice: coefficients of exactly the weight that
    /// makes the whole operator lower weighted degree by e_i.
    Homogeneous,
    /// All coefficient monomials of weighted degree at most the bound.
    Bounded(u32),
}

/// The operator induced on the quotient chart by the dual operator of the
/// i-th invariant. Matches the action on every monomial t^mu with
/// |mu| <= deg d_i, then re-checks the identity up to |mu| <= deg d_i +
/// verify_margin.
pub fn reduce_dual_operator(
    sys: &InvariantSystem,
    i: usize,
    verify_margin: u32,
) -> Result<WeylElement> {
    let cert = dual_cert(sys, i)?;
    reduce_with(sys, i, verify_margin, &|w| cert.apply_poly(w))
}

/// Like [`reduce_dual_operator`], but for the action conjugated by `v`:
/// u maps to (1/v) * Q(v * u). The intermediate images must stay polynomial;
/// when the division by `v` leaves a remainder the construction reports
/// `VerificationFailure`.
pub fn reduce_conjugated(
    sys: &InvariantSystem,
    i: usize,
    verify_margin: u32,
    v: &MultiPoly,
) -> Result<WeylElement> {
    if v.is_zero() {
        return Err(Error::Mismatch("conjugation by zero".into()));
    }
    let cert = dual_cert(sys, i)?;
    let v = v.embed(sys.ambient());
    reduce_with(sys, i, verify_margin, &move |w| {
        let image = cert.apply_poly(&v.mul(w))?;
        if image.is_zero() {
            return Ok(image);
        }
        image.exact_div(&v).ok_or_else(|| {
            Error::VerificationFailure(
                "conjugated image is not divisible by the conjugating polynomial".into(),
            )
        })
    })
}

/// Dual operator of the i-th invariant over the ambient variables.
fn dual_cert(sys: &InvariantSystem, i: usize) -> Result<WeylElement> {
    if i >= sys.invariants.len() {
        return Err(Error::Mismatch(format!(
            "invariant index {i} out of range 0..{}",
            sys.invariants.len()
        )));
    }
    if !check_alg_independent(sys) {
        return Err(Error::Mismatch(
            "invariants failed the random-point independence certificate".into(),
        ));
    }
    let dual = dual_invariant(&sys.invariants[i])?;
    WeylElement::dual_operator(&dual, sys.ambient.to_vec(), Vec::new())
}

fn reduce_with(
    sys: &InvariantSystem,
    i: usize,
    verify_margin: u32,
    image: &dyn Fn(&MultiPoly) -> Result<MultiPoly>,
) -> Result<WeylElement> {
    let k = sys.invariants.len();
    let e_i = sys.degrees[i];
    let max_e = *sys.degrees.iter().max().expect("nonempty");

    // Position of the j-th quotient coordinate in the sorted universe that
    // WeylElement uses for its exponent slices.
    let mut sorted_q = sys.quotient.to_vec();
    sorted_q.sort();
    let pos: Vec<usize> = sys
        .quotient
        .iter()
        .map(|t| sorted_q.binary_search(t).expect("present"))
        .collect();
    let to_sorted = |exps: &[u32]| {
        let mut out = vec![0u32; k];
        for (j, &e) in exps.iter().enumerate() {
            out[pos[j]] = e;
        }
        out
    };

    // Right-hand sides: the quotient-side expression of the image of d^mu,
    // for every monomial needed by construction and verification.
    let mut cache = PowerCache::new(k);
    let mus = exponents_upto(k, e_i + verify_margin);
    let mut rhs_of: BTreeMap<Vec<u32>, MultiPoly> = BTreeMap::new();
    for mu in &mus {
        let w = sys.d_power(mu, &mut cache);
        let img = image(&w)?;
        let expr = subring_express(&img, sys)?.embed(&sorted_q);
        rhs_of.insert(mu.clone(), expr);
    }

    let betas = exponents_upto(k, e_i);
    let tiers = [
        AnsatzTier::Homogeneous,
        AnsatzTier::Bounded(e_i * max_e),
        AnsatzTier::Bounded(2 * e_i * max_e),
    ];
    for tier in &tiers {
        // Unknowns: one coefficient per (beta, nu) with nu drawn from the
        // tier's pool for that beta.
        let mut unknowns: Vec<(usize, Vec<u32>)> = Vec::new();
        for (bi, beta) in betas.iter().enumerate() {
            let wbeta: u32 = beta.iter().zip(&sys.degrees).map(|(&b, &e)| b * e).sum();
            match tier {
                AnsatzTier::Homogeneous => {
                    if wbeta >= e_i {
                        for nu in weighted_exponents(&sys.degrees, wbeta - e_i) {
                            unknowns.push((bi, nu));
                        }
                    }
                }
                AnsatzTier::Bounded(bound) => {
                    for wd in 0..=*bound {
                        for nu in weighted_exponents(&sys.degrees, wd) {
                            unknowns.push((bi, nu));
                        }
                    }
                }
            }
        }
        if unknowns.is_empty() {
            continue;
        }
        // Equations: matching coefficients of Q(t^mu) against the stored
        // right-hand side, for |mu| <= e_i.
        let mut row_of: BTreeMap<(usize, Vec<u32>), usize> = BTreeMap::new();
        let mut entries: Vec<(usize, usize, Rational)> = Vec::new();
        let mut rhs_rows: Vec<(usize, Rational)> = Vec::new();
        for (mi, mu) in mus.iter().enumerate() {
            let msum: u32 = mu.iter().sum();
            if msum > e_i {
                continue;
            }
            for (col, (bi, nu)) in unknowns.iter().enumerate() {
                let beta = &betas[*bi];
                let mut ff = Rational::from_integer(1.into());
                let mut fits = true;
                for (m, b) in mu.iter().zip(beta) {
                    if b > m {
                        fits = false;
                        break;
                    }
                    ff = ff * Rational::from_integer(crate::exact::falling(*m, *b));
                }
                if !fits {
                    continue;
                }
                let mono: Vec<u32> = mu
                    .iter()
                    .zip(beta)
                    .zip(nu)
                    .map(|((m, b), n)| m - b + n)
                    .collect();
                let key = (mi, to_sorted(&mono));
                let next = row_of.len();
                let row = *row_of.entry(key).or_insert(next);
                entries.push((row, col, ff));
            }
            for (mono, c) in rhs_of[mu].sorted_terms() {
                let key = (mi, mono.to_vec());
                let next = row_of.len();
                let row = *row_of.entry(key).or_insert(next);
                rhs_rows.push((row, c.clone()));
            }
        }
        let mut matrix = vec![vec![Rational::zero(); unknowns.len()]; row_of.len()];
        let mut rhs = vec![Rational::zero(); row_of.len()];
        for (row, col, c) in entries {
            matrix[row][col] = matrix[row][col].clone() + c;
        }
        for (row, c) in rhs_rows {
            rhs[row] = c;
        }
        let LinearOutcome::Solved(sol) = solve_linear_rational(&matrix, &rhs)? else {
            continue;
        };
        let mut terms: Vec<(Vec<u32>, Vec<u32>, MultiPoly)> = Vec::new();
        for ((bi, nu), c) in unknowns.iter().zip(&sol.particular) {
            let v = c
                .as_constant()
                .ok_or_else(|| Error::Mismatch("parameter leaked into a rational solve".into()))?;
            if !v.is_zero() {
                terms.push((
                    to_sorted(nu),
                    to_sorted(&betas[*bi]),
                    MultiPoly::constant(v),
                ));
            }
        }
        let q = WeylElement::from_terms(sorted_q.clone(), Vec::new(), terms);
        // Full verification, including the margin beyond the construction
        // range.
        let mut good = true;
        for mu in &mus {
            let t_mu = sys.t_monomial(mu).embed(&sorted_q);
            let got = q.apply_poly(&t_mu)?;
            if !got.sub(&rhs_of[mu]).is_zero() {
                good = false;
                break;
            }
        }
        if good {
            return Ok(q);
        }
    }
    Err(Error::VerificationFailure(format!(
        "no operator of order at most {e_i} with coefficients within the doubled degree bound \
         matches the action of invariant {i}"
    )))
}

/// Substitutes the operators into `g`, pairing the sorted variables of `g`
/// with `ops` in order. Pairs of operators that occur together in a term of
/// `g` must commute; operators that never meet may be arbitrary.
pub fn compose_commuting(g: &MultiPoly, ops: &[WeylElement]) -> Result<WeylElement> {
    let g = g.compress_vars();
    let vars: Vec<String> = g.vars().to_vec();
    if vars.len() != ops.len() {
        return Err(Error::Mismatch(format!(
            "{} substitution variables but {} operators",
            vars.len(),
            ops.len()
        )));
    }
    if ops.is_empty() {
        return Err(Error::Mismatch(
            "constant polynomials leave the operator universe undetermined".into(),
        ));
    }
    // Common universe for all operators.
    let mut joint = ops[0].clone();
    for o in &ops[1..] {
        let (widened, _) = joint.align(o);
        joint = widened;
    }
    let aligned: Vec<WeylElement> = ops.iter().map(|o| o.align(&joint).0).collect();

    // Pairs that meet in some term of g.
    let mut meeting: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (mono, _) in g.sorted_terms() {
        let active: Vec<usize> = mono
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, _)| j)
            .collect();
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                meeting.insert((active[a], active[b]));
            }
        }
    }
    for &(a, b) in &meeting {
        let ab = aligned[a].mul(&aligned[b]);
        let ba = aligned[b].mul(&aligned[a]);
        if !ab.sub(&ba).is_zero() {
            return Err(Error::NonCommuting(format!(
                "operators for {} and {} do not commute",
                vars[a], vars[b]
            )));
        }
    }

    let mut ladders: Vec<Vec<WeylElement>> = Vec::with_capacity(aligned.len());
    for (j, op) in aligned.iter().enumerate() {
        let dmax = g.degree_in(&vars[j]).unwrap_or(0);
        let mut ladder = vec![WeylElement::one(
            joint.x_names().to_vec(),
            joint.s_names().to_vec(),
        )];
        for e in 1..=dmax {
            let next = ladder[(e - 1) as usize].mul(op);
            ladder.push(next);
        }
        ladders.push(ladder);
    }
    let mut acc = WeylElement::new(joint.x_names().to_vec(), joint.s_names().to_vec());
    for (mono, c) in g.sorted_terms() {
        let mut term = WeylElement::one(joint.x_names().to_vec(), joint.s_names().to_vec());
        for (j, &e) in mono.iter().enumerate() {
            if e > 0 {
                term = term.mul(&ladders[j][e as usize]);
            }
        }
        acc = acc.add(&term.scale(c));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat_int;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn p(src: &str) -> MultiPoly {
        MultiPoly::parse(src).unwrap()
    }

    fn sys(ambient: &[&str], invs: &[&str]) -> InvariantSystem {
        InvariantSystem::with_default_names(
            names(ambient),
            invs.iter().map(|s| p(s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constructor_rejects_malformed_systems() {
        assert!(InvariantSystem::with_default_names(names(&["x1"]), vec![]).is_err());
        // More invariants than variables.
        assert!(InvariantSystem::with_default_names(
            names(&["x1"]),
            vec![p("x1"), p("x1^2")]
        )
        .is_err());
        // Inhomogeneous.
        assert!(
            InvariantSystem::with_default_names(names(&["x1", "x2"]), vec![p("x1 + x2^2")])
                .is_err()
        );
        // Unknown variable.
        assert!(
            InvariantSystem::with_default_names(names(&["x1"]), vec![p("x1*x9")]).is_err()
        );
        // Name collision between the two sides.
        assert!(InvariantSystem::new(
            names(&["x1", "x2"]),
            vec![p("x1*x2")],
            names(&["x1"])
        )
        .is_err());
    }

    #[test]
    fn coordinates_are_independent_and_powers_are_not() {
        assert!(check_alg_independent(&sys(&["x1", "x2"], &["x1", "x2"])));
        assert!(!check_alg_independent(&sys(
            &["x1", "x2"],
            &["x1*x2", "x1^2*x2^2"]
        )));
    }

    #[test]
    fn elementary_symmetric_expressions_round_trip() {
        let s = sys(&["x1", "x2"], &["x1 + x2", "x1*x2"]);
        assert!(check_alg_independent(&s));
        // (x1 - x2)^2 = e1^2 - 4 e2.
        let e = subring_express(&p("x1^2 - 2*x1*x2 + x2^2"), &s).unwrap();
        assert_eq!(e, p("t1^2 - 4*t2"));
        // Mixed-degree input handled per component.
        let f = subring_express(&p("x1 + x2 + 5 + 3*x1*x2"), &s).unwrap();
        assert_eq!(f, p("t1 + 3*t2 + 5"));
        // Round trip back through the invariants.
        let back = f
            .substitute("t1", &p("x1 + x2"))
            .substitute("t2", &p("x1*x2"));
        assert!(back.sub(&p("x1 + x2 + 5 + 3*x1*x2")).is_zero());
    }

    #[test]
    fn non_members_are_rejected() {
        let s = sys(&["x1", "x2"], &["x1*x2"]);
        match subring_express(&p("x1"), &s) {
            Err(Error::NotInSubring(_)) => {}
            other => panic!("expected NotInSubring, got {other:?}"),
        }
        // Right degree, wrong polynomial.
        match subring_express(&p("x1^2*x2^2 + x1^4"), &s) {
            Err(Error::NotInSubring(_)) => {}
            other => panic!("expected NotInSubring, got {other:?}"),
        }
        // Foreign variable.
        assert!(subring_express(&p("z"), &s).is_err());
    }

    #[test]
    fn single_coordinate_reduces_to_the_plain_derivative() {
        let s = sys(&["x"], &["x"]);
        let q = reduce_dual_operator(&s, 0, 3).unwrap();
        let expected = WeylElement::dx_var(names(&["t1"]), Vec::new(), "t1");
        assert!(q.sub(&expected).is_zero());
    }

    #[test]
    fn coordinate_product_gives_the_euler_square() {
        let s = sys(&["x1", "x2"], &["x1*x2"]);
        let q = reduce_dual_operator(&s, 0, 3).unwrap();
        // t d^2 + d, matched exactly.
        let t = names(&["t1"]);
        let dt = WeylElement::dx_var(t.clone(), Vec::new(), "t1");
        let tv = WeylElement::x_var(t.clone(), Vec::new(), "t1");
        let expected = tv.mul(&dt.pow(2)).add(&dt);
        assert!(q.sub(&expected).is_zero());
        // Action oracle: Q(t^k) = k^2 t^(k-1).
        for k in 0u32..6 {
            let img = q.apply_poly(&MultiPoly::var_pow("t1", k)).unwrap();
            let want = MultiPoly::var_pow("t1", k.saturating_sub(1))
                .scale(&rat_int((k as i64) * (k as i64)));
            let want = if k == 0 { MultiPoly::zero() } else { want };
            assert!(img.sub(&want).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn sum_of_squares_reduces_to_a_scaled_bessel_operator() {
        let s = sys(&["x1", "x2"], &["x1^2 + x2^2"]);
        let q = reduce_dual_operator(&s, 0, 2).unwrap();
        let t = names(&["t1"]);
        let dt = WeylElement::dx_var(t.clone(), Vec::new(), "t1");
        let tv = WeylElement::x_var(t.clone(), Vec::new(), "t1");
        let expected = tv.mul(&dt.pow(2)).scale(&rat_int(4)).add(&dt.scale(&rat_int(4)));
        assert!(q.sub(&expected).is_zero());
    }

    #[test]
    fn reduction_is_deterministic() {
        let s = sys(&["x1", "x2"], &["x1*x2"]);
        let a = reduce_dual_operator(&s, 0, 2).unwrap();
        let b = reduce_dual_operator(&s, 0, 2).unwrap();
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn conjugation_by_one_changes_nothing() {
        let s = sys(&["x1", "x2"], &["x1*x2"]);
        let plain = reduce_dual_operator(&s, 0, 2).unwrap();
        let conj = reduce_conjugated(&s, 0, 2, &MultiPoly::one()).unwrap();
        assert!(plain.sub(&conj).is_zero());
    }

    #[test]
    fn conjugation_must_stay_polynomial() {
        let s = sys(&["x"], &["x"]);
        match reduce_conjugated(&s, 0, 2, &p("x")) {
            Err(Error::VerificationFailure(_)) => {}
            other => panic!("expected VerificationFailure, got {other:?}"),
        }
    }

    #[test]
    fn conjugated_square_picks_up_a_first_order_correction() {
        let s = sys(&["x"], &["x^2"]);
        let q = reduce_conjugated(&s, 0, 2, &p("x")).unwrap();
        let t = names(&["t1"]);
        let dt = WeylElement::dx_var(t.clone(), Vec::new(), "t1");
        let tv = WeylElement::x_var(t.clone(), Vec::new(), "t1");
        let expected = tv.mul(&dt.pow(2)).scale(&rat_int(4)).add(&dt.scale(&rat_int(6)));
        assert!(q.sub(&expected).is_zero());
        // Oracle: (1/x) (d/dx)^2 x^(2k+1) expressed downstairs.
        for k in 1u32..5 {
            let img = q.apply_poly(&MultiPoly::var_pow("t1", k)).unwrap();
            let c = rat_int((2 * k) as i64) * rat_int((2 * k + 1) as i64);
            let want = MultiPoly::var_pow("t1", k - 1).scale(&c);
            assert!(img.sub(&want).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn composition_substitutes_and_checks_only_meeting_pairs() {
        let x = names(&["x"]);
        let dx = WeylElement::dx_var(x.clone(), Vec::new(), "x");
        let xdx = WeylElement::x_var(x.clone(), Vec::new(), "x").mul(&dx);
        // t1 + t2 has no mixed term, so the non-commuting pair is accepted.
        let sum = compose_commuting(&p("t1 + t2"), &[xdx.clone(), dx.clone()]).unwrap();
        assert!(sum.sub(&xdx.add(&dx)).is_zero());
        // t1*t2 forces the commutation check.
        match compose_commuting(&p("t1*t2"), &[xdx.clone(), dx.clone()]) {
            Err(Error::NonCommuting(_)) => {}
            other => panic!("expected NonCommuting, got {other:?}"),
        }
        // Powers of a single operator.
        let sq = compose_commuting(&p("t^2"), &[dx.clone()]).unwrap();
        assert!(sq.sub(&dx.pow(2)).is_zero());
        // A genuinely commuting pair in two variables.
        let xy = names(&["u", "v"]);
        let du = WeylElement::dx_var(xy.clone(), Vec::new(), "u");
        let dv = WeylElement::dx_var(xy.clone(), Vec::new(), "v");
        let got = compose_commuting(&p("t1*t2 + t1"), &[du.clone(), dv.clone()]).unwrap();
        assert!(got.sub(&du.mul(&dv).add(&du)).is_zero());
        // Arity mismatch is a usage error.
        assert!(compose_commuting(&p("t1"), &[du.clone(), dv]).is_err());
    }

    #[test]
    fn file_format_round_trip() {
        let text = "# toy system\n x1, x2\n x1 + x2\n x1*x2\n";
        let s = InvariantSystem::from_text(text).unwrap();
        assert_eq!(s.quotient(), &names(&["t1", "t2"])[..]);
        assert_eq!(s.degrees(), &[1, 2]);
        let e = subring_express(&p("x1^2 + 2*x1*x2 + x2^2"), &s).unwrap();
        assert_eq!(e, p("t1^2"));
        assert!(InvariantSystem::from_text("").is_err());
        assert!(InvariantSystem::from_text("x1\n x1 +").is_err());
    }

    #[test]
    fn scaled_invariant_rescales_the_reduced_operator() {
        // t now stands for 3*x1*x2: the certificate keeps the scale, the
        // chart coordinate absorbs one power, net effect 9 k^2.
        let s = sys(&["x1", "x2"], &["3*x1*x2"]);
        let q = reduce_dual_operator(&s, 0, 2).unwrap();
        for k in 1u32..4 {
            let img = q.apply_poly(&MultiPoly::var_pow("t1", k)).unwrap();
            let want = MultiPoly::var_pow("t1", k - 1).scale(&rat_int(9 * (k * k) as i64));
            assert!(img.sub(&want).is_zero(), "k = {k}");
        }
    }
}
