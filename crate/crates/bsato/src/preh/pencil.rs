//! Pairs of symmetric 3x3 matrices (X, Y) in twelve coordinates. The
//! determinant of the pencil u X + v Y packages four cubic invariants
//! d1..d4; the discriminant of the associated binary cubic, composed with
//! those invariants, is the degree-12 semi-invariant f of the space.
//!
//! On top of the invariants sit the auxiliary polynomials v4, v6, v8 built
//! from the 2x2 minors of the stacked coefficient matrix Z, the quartic
//! equation they define, a sampled mod-p certificate that the quartic's
//! discriminant is divisible by f, and the reduction pipeline that pushes
//! the dual operator of f down to the four-variable quotient.

use num::bigint::BigInt;
use num::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bfun::{dual_invariant, BPoly};
use crate::error::{Error, Result};
use crate::exact::{rat, MultiPoly, Rational};
use crate::groebner::nf_extract_b;
use crate::invariants::{compose_commuting, reduce_dual_operator, InvariantSystem};
use crate::preh::binary::{binary_discriminant, twisted_ideal};
use crate::weyl::{MonomialOrder, WeylElement};

/// Fixed default seed for the sampled divisibility certificate.
pub const QUARTIC_SEED: u64 = 0xD15C_2B5A;

/// The six independent positions of a symmetric 3x3 matrix, in the column
/// order of the stacked matrix Z.
const POSITIONS: [(usize, usize); 6] = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

/// Coordinates x11..x33, y11..y33 of a pencil of symmetric matrices; the
/// stacked 2x6 matrix Z has the x-entries in its first row and the
/// y-entries in its second, with columns numbered 0..5.
#[derive(Debug, Clone)]
pub struct PencilSpace {
    vars: Vec<String>,
}

impl PencilSpace {
    pub fn new() -> Self {
        let mut vars = Vec::with_capacity(12);
        for prefix in ['x', 'y'] {
            for (i, j) in POSITIONS {
                vars.push(format!("{prefix}{i}{j}"));
            }
        }
        PencilSpace { vars }
    }

    /// All twelve coordinates, x-row first.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// 2x2 minor of Z on columns i and j. Equal columns give zero; the
    /// minor is antisymmetric in (i, j).
    pub fn minor(&self, i: usize, j: usize) -> Result<MultiPoly> {
        if i > 5 || j > 5 {
            return Err(Error::Mismatch(format!("Z has columns 0..5, got ({i}, {j})")));
        }
        let x = |k: usize| MultiPoly::var(&self.vars[k]);
        let y = |k: usize| MultiPoly::var(&self.vars[6 + k]);
        Ok(x(i).mul(&y(j)).sub(&x(j).mul(&y(i))))
    }

    /// The symmetric matrix of one row as polynomial entries.
    fn matrix(&self, row: usize) -> [[MultiPoly; 3]; 3] {
        let mut m: [[MultiPoly; 3]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| MultiPoly::zero()));
        for (k, &(i, j)) in POSITIONS.iter().enumerate() {
            let v = MultiPoly::var(&self.vars[6 * row + k]);
            m[i - 1][j - 1] = v.clone();
            m[j - 1][i - 1] = v;
        }
        m
    }
}

impl Default for PencilSpace {
    fn default() -> Self {
        Self::new()
    }
}

fn det3(m: &[[MultiPoly; 3]; 3]) -> MultiPoly {
    let mut acc = MultiPoly::zero();
    for (perm, sign) in [
        ([0, 1, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([2, 1, 0], -1),
        ([1, 0, 2], -1),
        ([0, 2, 1], -1),
    ] {
        let prod = m[0][perm[0]].mul(&m[1][perm[1]]).mul(&m[2][perm[2]]);
        acc = if sign > 0 { acc.add(&prod) } else { acc.sub(&prod) };
    }
    acc
}

/// The four cubic invariants read off from
/// det(u X + v Y) = d1 u^3 + d2 u^2 v + d3 u v^2 + d4 v^3.
pub fn pencil_invariants() -> (MultiPoly, MultiPoly, MultiPoly, MultiPoly) {
    let space = PencilSpace::new();
    let xm = space.matrix(0);
    let ym = space.matrix(1);
    let u = MultiPoly::var("u");
    let v = MultiPoly::var("v");
    let pencil: [[MultiPoly; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| u.mul(&xm[i][j]).add(&v.mul(&ym[i][j])))
    });
    let det = det3(&pencil);
    let by_v = det.coeffs_in("v");
    let mut ds = Vec::with_capacity(4);
    for k in 0..4 {
        let slice = by_v.get(k).cloned().unwrap_or_else(MultiPoly::zero);
        let coeff = slice
            .coeffs_in("u")
            .get(3 - k)
            .cloned()
            .unwrap_or_else(MultiPoly::zero);
        ds.push(coeff);
    }
    let d4 = ds.pop().unwrap();
    let d3 = ds.pop().unwrap();
    let d2 = ds.pop().unwrap();
    let d1 = ds.pop().unwrap();
    (d1, d2, d3, d4)
}

/// The auxiliary polynomials (v4, v6, v8) of degrees 4, 6, 8. The first two
/// are fixed combinations of Z-minors; v8 combines the corner coordinates
/// x11, y11 with the invariants and v4 itself.
pub fn pencil_v_polys() -> Result<(MultiPoly, MultiPoly, MultiPoly)> {
    let space = PencilSpace::new();
    let d = |i: usize, j: usize| space.minor(i, j);

    let v4 = d(0, 4)?
        .mul(&d(0, 4)?)
        .sub(&d(0, 3)?.mul(&d(0, 5)?))
        .add(&d(0, 2)?.mul(&d(2, 3)?).scale(&Rational::from_integer(2.into())))
        .add(&d(0, 4)?.mul(&d(1, 2)?).scale(&Rational::from_integer(2.into())))
        .add(&d(1, 2)?.mul(&d(1, 2)?).scale(&Rational::from_integer(3.into())))
        .sub(&d(0, 2)?.mul(&d(1, 4)?).scale(&Rational::from_integer(4.into())))
        .add(&d(0, 1)?.mul(&d(1, 5)?).scale(&Rational::from_integer(2.into())));

    let v6 = d(0, 4)?
        .mul(&d(1, 2)?)
        .mul(&d(1, 2)?)
        .add(&d(1, 2)?.mul(&d(1, 2)?).mul(&d(1, 2)?))
        .add(&d(0, 2)?.mul(&d(0, 5)?).mul(&d(1, 3)?))
        .sub(&d(0, 1)?.mul(&d(0, 5)?).mul(&d(1, 4)?))
        .sub(&d(0, 2)?
            .mul(&d(1, 2)?)
            .mul(&d(1, 4)?)
            .scale(&Rational::from_integer(2.into())))
        .sub(&d(0, 2)?.mul(&d(0, 3)?).mul(&d(1, 5)?))
        .add(&d(0, 1)?.mul(&d(0, 4)?).mul(&d(1, 5)?))
        .add(&d(0, 1)?.mul(&d(1, 2)?).mul(&d(1, 5)?))
        .add(&d(0, 2)?.mul(&d(2, 3)?).mul(&d(1, 2)?))
        .add(&d(0, 2)?.mul(&d(0, 2)?).mul(&d(3, 4)?));

    let (d1, d2, d3, d4) = pencil_invariants();
    let x11 = MultiPoly::var("x11");
    let y11 = MultiPoly::var("y11");
    let four = Rational::from_integer(4.into());
    let twelve = Rational::from_integer(12.into());
    let inner = y11
        .mul(&y11)
        .mul(&d2)
        .mul(&d2)
        .scale(&four)
        .sub(&y11.mul(&y11).mul(&d1).mul(&d3).scale(&twelve))
        .sub(&x11.mul(&y11).mul(&d2).mul(&d3).scale(&four))
        .add(&x11.mul(&x11).mul(&d3).mul(&d3).scale(&four))
        .add(&x11
            .mul(&y11)
            .mul(&d1)
            .mul(&d4)
            .scale(&Rational::from_integer(36.into())))
        .sub(&x11.mul(&x11).mul(&d2).mul(&d4).scale(&twelve))
        .sub(&v4.mul(&v4));
    let v8 = inner.scale(&rat(-1, 3));

    Ok((v4, v6, v8))
}

/// The degree-12 semi-invariant: the binary-cubic discriminant composed
/// with the pencil invariants.
pub fn pencil_semiinvariant() -> Result<MultiPoly> {
    let (d1, d2, d3, d4) = pencil_invariants();
    let mut f = binary_discriminant(3)?;
    for (name, di) in [("x0", &d1), ("x1", &d2), ("x2", &d3), ("x3", &d4)] {
        f = f.substitute(name, di);
    }
    Ok(f)
}

/// The seven-element system x11, y11, d1..d4, v4 on the pencil space, with
/// quotient coordinates z1..z7. Its members are algebraically independent,
/// and v6^2, v8, and f all lie in the subring they generate.
pub fn subpol_system() -> Result<InvariantSystem> {
    let space = PencilSpace::new();
    let (d1, d2, d3, d4) = pencil_invariants();
    let (v4, _, _) = pencil_v_polys()?;
    let invariants = vec![
        MultiPoly::var("x11"),
        MultiPoly::var("y11"),
        d1,
        d2,
        d3,
        d4,
        v4,
    ];
    let quotient = (1..=7).map(|i| format!("z{i}")).collect();
    InvariantSystem::new(space.vars().to_vec(), invariants, quotient)
}

/// Outcome of the sampled divisibility certificate for one modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeReport {
    pub prime: u64,
    pub points: u32,
    pub failures: u32,
    pub resamples: u32,
}

/// Checks, on random mod-p points of the hypersurface f = 0, that the
/// discriminant of the quartic y^4 - 2 v4 y^2 + 8 v6 y - v8 vanishes as
/// well. Every trial samples eleven coordinates, solves f = 0 for the last
/// one, and counts a failure when the quartic discriminant is nonzero at
/// the point.
pub fn quartic_divisibility_check(
    primes: &[u64],
    points_per_prime: u32,
    seed: u64,
) -> Result<Vec<PrimeReport>> {
    let (v4, v6, v8) = pencil_v_polys()?;
    quartic_divisibility_check_with(primes, points_per_prime, seed, &v4, &v6, &v8)
}

/// Same certificate with caller-supplied quartic coefficients, so a broken
/// input can be shown to fail.
pub fn quartic_divisibility_check_with(
    primes: &[u64],
    points_per_prime: u32,
    seed: u64,
    v4: &MultiPoly,
    v6: &MultiPoly,
    v8: &MultiPoly,
) -> Result<Vec<PrimeReport>> {
    const MAX_RESAMPLES: u32 = 50;
    let space = PencilSpace::new();
    let universe: Vec<String> = {
        let mut v = space.vars().to_vec();
        v.sort();
        v
    };
    let f = pencil_semiinvariant()?;
    // Solve for the last coordinate in sorted order (y33).
    let solve_var = universe.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(primes.len());
    for &p in primes {
        if p < 512 || !is_prime(p) {
            return Err(Error::Mismatch(format!(
                "modulus {p} is too small or composite"
            )));
        }
        let fm = ModPoly::new(&f, &universe, p)?;
        let v4m = ModPoly::new(v4, &universe, p)?;
        let v6m = ModPoly::new(v6, &universe, p)?;
        let v8m = ModPoly::new(v8, &universe, p)?;
        let mut failures = 0;
        let mut resamples = 0;
        for _ in 0..points_per_prime {
            let mut found = None;
            for _ in 0..MAX_RESAMPLES {
                let mut point: Vec<u64> =
                    (0..universe.len()).map(|_| rng.gen_range(0..p)).collect();
                let coeffs = fm.eval_partial(&point, solve_var, p);
                match first_root(&coeffs, p) {
                    Some(root) => {
                        point[solve_var] = root;
                        found = Some(point);
                        break;
                    }
                    None => resamples += 1,
                }
            }
            let Some(point) = found else {
                return Err(Error::ResourceLimit(format!(
                    "no root of f found mod {p} within {MAX_RESAMPLES} resamples"
                )));
            };
            let a = p - mul_mod(2, v4m.eval(&point, p), p); // -2 v4
            let b = mul_mod(8, v6m.eval(&point, p), p);
            let c = (p - v8m.eval(&point, p)) % p; // -v8
            if depressed_quartic_disc(a, b, c, p) != 0 {
                failures += 1;
            }
        }
        reports.push(PrimeReport { prime: p, points: points_per_prime, failures, resamples });
    }
    Ok(reports)
}

/// Discriminant of y^4 + a y^2 + b y + c mod p.
fn depressed_quartic_disc(a: u64, b: u64, c: u64, p: u64) -> u64 {
    let a2 = mul_mod(a, a, p);
    let a3 = mul_mod(a2, a, p);
    let a4 = mul_mod(a2, a2, p);
    let b2 = mul_mod(b, b, p);
    let b4 = mul_mod(b2, b2, p);
    let c2 = mul_mod(c, c, p);
    let c3 = mul_mod(c2, c, p);
    let mut acc = mul_mod(256 % p, c3, p);
    acc = (acc + p - mul_mod(128 % p, mul_mod(a2, c2, p), p) % p) % p;
    acc = (acc + mul_mod(144 % p, mul_mod(a, mul_mod(b2, c, p), p), p)) % p;
    acc = (acc + p - mul_mod(27 % p, b4, p) % p) % p;
    acc = (acc + mul_mod(16 % p, mul_mod(a4, c, p), p)) % p;
    acc = (acc + p - mul_mod(4 % p, mul_mod(a3, b2, p), p) % p) % p;
    acc
}

fn first_root(coeffs: &[u64], p: u64) -> Option<u64> {
    if coeffs.iter().all(|&c| c == 0) {
        // f restricted to the line vanishes identically; any value lies on
        // the hypersurface.
        return Some(0);
    }
    (0..p).find(|&t| {
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = (mul_mod(acc, t, p) + c) % p;
        }
        acc == 0
    })
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a % p * (b % p) % p
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn big_mod(x: &BigInt, p: u64) -> u64 {
    let m = x % BigInt::from(p);
    let m = if m.is_negative() { m + BigInt::from(p) } else { m };
    m.to_u64().expect("reduced residue fits")
}

/// A polynomial frozen mod p over a fixed variable universe.
struct ModPoly {
    exps: Vec<Box<[u32]>>,
    coeffs: Vec<u64>,
}

impl ModPoly {
    fn new(f: &MultiPoly, universe: &[String], p: u64) -> Result<Self> {
        let f = f.embed(universe);
        let mut exps = Vec::with_capacity(f.num_terms());
        let mut coeffs = Vec::with_capacity(f.num_terms());
        for (m, c) in f.sorted_terms() {
            let den = big_mod(c.denom(), p);
            if den == 0 {
                return Err(Error::Mismatch(format!(
                    "coefficient denominator vanishes mod {p}"
                )));
            }
            let val = mul_mod(big_mod(c.numer(), p), inv_mod(den, p), p);
            if val != 0 {
                exps.push(m.to_vec().into_boxed_slice());
                coeffs.push(val);
            }
        }
        Ok(ModPoly { exps, coeffs })
    }

    fn eval(&self, point: &[u64], p: u64) -> u64 {
        let mut acc = 0u64;
        for (m, &c) in self.exps.iter().zip(&self.coeffs) {
            let mut t = c;
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = mul_mod(t, pow_mod(point[i], e as u64, p), p);
                }
            }
            acc = (acc + t) % p;
        }
        acc
    }

    /// Coefficient list in the free variable, all others taken from the
    /// point.
    fn eval_partial(&self, point: &[u64], free: usize, p: u64) -> Vec<u64> {
        let deg = self.exps.iter().map(|m| m[free]).max().unwrap_or(0) as usize;
        let mut out = vec![0u64; deg + 1];
        for (m, &c) in self.exps.iter().zip(&self.coeffs) {
            let mut t = c;
            for (i, &e) in m.iter().enumerate() {
                if i != free && e > 0 {
                    t = mul_mod(t, pow_mod(point[i], e as u64, p), p);
                }
            }
            let k = m[free] as usize;
            out[k] = (out[k] + t) % p;
        }
        out
    }
}

/// The reduction pipeline on the quotient: reduces the dual operator of
/// each invariant d1..d4 to the four coordinates x0..x3, rescales each so
/// that it pairs to 1 against its own invariant, composes them along the
/// dual polynomial of the binary cubic discriminant, and extracts the
/// b-function of the discriminant through the twisted ideal. Runs for a
/// long time; reserved for the extended suite and the pipeline-l1 job.
pub fn pencil_pipeline_l1() -> Result<BPoly> {
    let q = pencil_reduced_operator()?;
    let disc = binary_discriminant(3)?;
    nf_extract_b(&q, &disc, &twisted_ideal(3)?, MonomialOrder::default())
}

/// The composed twelfth-order operator on the quotient coordinates.
pub fn pencil_reduced_operator() -> Result<WeylElement> {
    let space = PencilSpace::new();
    let (d1, d2, d3, d4) = pencil_invariants();
    let ds = [d1, d2, d3, d4];
    let quotient: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
    let sys = InvariantSystem::new(space.vars().to_vec(), ds.to_vec(), quotient)?;
    let mut ops = Vec::with_capacity(4);
    for i in 0..4 {
        let mu = pairing_scale(&ds, i)?;
        let q = reduce_dual_operator(&sys, i, 1)?;
        ops.push(q.scale(&mu.recip()));
    }
    let outer = dual_invariant(&binary_discriminant(3)?)?;
    compose_commuting(&outer, &ops)
}

/// Pairing of the i-th dual operator against the invariants: diagonal by
/// equivariance, and the diagonal entry is the scale the reduced operator
/// has to be divided by so the four duals form the basis dual to d1..d4.
fn pairing_scale(ds: &[MultiPoly; 4], i: usize) -> Result<Rational> {
    let dual = dual_invariant(&ds[i])?;
    let mut vars = PencilSpace::new().vars().to_vec();
    vars.sort();
    let cert = WeylElement::dual_operator(&dual.embed(&vars), vars.clone(), Vec::new())?;
    let mut diagonal = None;
    for (j, dj) in ds.iter().enumerate() {
        let image = cert.apply_poly(&dj.embed(&vars))?;
        let value = image.as_constant().ok_or_else(|| {
            Error::VerificationFailure("dual pairing is not scalar".into())
        })?;
        if j == i {
            if value.is_zero() {
                return Err(Error::VerificationFailure(
                    "dual operator pairs to zero against its own invariant".into(),
                ));
            }
            diagonal = Some(value);
        } else if !value.is_zero() {
            return Err(Error::VerificationFailure(format!(
                "dual operator of invariant {i} pairs to {value} against invariant {j}"
            )));
        }
    }
    Ok(diagonal.expect("loop visits i"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn p(src: &str) -> MultiPoly {
        MultiPoly::parse(src).unwrap()
    }

    #[test]
    fn minors_are_antisymmetric_and_vanish_on_the_diagonal() {
        let space = PencilSpace::new();
        assert!(space.minor(2, 2).unwrap().is_zero());
        let d01 = space.minor(0, 1).unwrap();
        assert_eq!(d01, p("x11*y12 - x12*y11"));
        assert_eq!(space.minor(1, 0).unwrap(), d01.neg());
        assert!(space.minor(0, 6).is_err());
    }

    #[test]
    fn edge_invariants_are_the_two_determinants() {
        let (d1, _, _, d4) = pencil_invariants();
        let det_x =
            p("x11*x22*x33 + 2*x12*x13*x23 - x11*x23^2 - x22*x13^2 - x33*x12^2");
        let det_y =
            p("y11*y22*y33 + 2*y12*y13*y23 - y11*y23^2 - y22*y13^2 - y33*y12^2");
        assert_eq!(d1, det_x);
        assert_eq!(d4, det_y);
    }

    #[test]
    fn pencil_determinant_identity_at_an_integer_point() {
        // det(2A + 3B) against sum d_i 2^(3-i) 3^(i-1) for one concrete
        // integer pair.
        let (d1, d2, d3, d4) = pencil_invariants();
        let assignments: [(&str, i64); 12] = [
            ("x11", 2), ("x12", -1), ("x13", 3), ("x22", 5), ("x23", 0), ("x33", 1),
            ("y11", 1), ("y12", 4), ("y13", -2), ("y22", 3), ("y23", 2), ("y33", -5),
        ];
        let point: HashMap<String, Rational> = assignments
            .iter()
            .map(|(n, v)| (n.to_string(), Rational::from_integer((*v).into())))
            .collect();
        let a = |i: usize, j: usize| -> i64 {
            let key = if i <= j { format!("x{i}{j}") } else { format!("x{j}{i}") };
            assignments.iter().find(|(n, _)| *n == key).unwrap().1
        };
        let b = |i: usize, j: usize| -> i64 {
            let key = if i <= j { format!("y{i}{j}") } else { format!("y{j}{i}") };
            assignments.iter().find(|(n, _)| *n == key).unwrap().1
        };
        let m = |i: usize, j: usize| 2 * a(i, j) + 3 * b(i, j);
        let det = m(1, 1) * (m(2, 2) * m(3, 3) - m(2, 3) * m(3, 2))
            - m(1, 2) * (m(2, 1) * m(3, 3) - m(2, 3) * m(3, 1))
            + m(1, 3) * (m(2, 1) * m(3, 2) - m(2, 2) * m(3, 1));
        let combo = d1.eval(&point).unwrap() * Rational::from_integer(8.into())
            + d2.eval(&point).unwrap() * Rational::from_integer(12.into())
            + d3.eval(&point).unwrap() * Rational::from_integer(18.into())
            + d4.eval(&point).unwrap() * Rational::from_integer(27.into());
        assert_eq!(combo, Rational::from_integer(det.into()));
    }

    #[test]
    fn invariants_are_algebraically_independent() {
        let space = PencilSpace::new();
        let (d1, d2, d3, d4) = pencil_invariants();
        let sys = InvariantSystem::with_default_names(
            space.vars().to_vec(),
            vec![d1, d2, d3, d4],
        )
        .unwrap();
        assert!(crate::invariants::check_alg_independent(&sys));
    }

    #[test]
    fn v_polys_have_the_right_degrees() {
        let (v4, v6, v8) = pencil_v_polys().unwrap();
        assert_eq!(v4.total_degree(), Some(4));
        assert_eq!(v6.total_degree(), Some(6));
        assert_eq!(v8.total_degree(), Some(8));
        for (v, d) in [(&v4, 4), (&v6, 6), (&v8, 8)] {
            for (m, _) in v.sorted_terms() {
                assert_eq!(m.iter().sum::<u32>(), d, "inhomogeneous term in v{d}");
            }
        }
    }

    #[test]
    fn v4_is_invariant_under_swapping_the_two_matrices() {
        let (v4, _, _) = pencil_v_polys().unwrap();
        let space = PencilSpace::new();
        let mut swapped = v4.clone();
        // Swap via fresh names so the substitutions cannot collide.
        for k in 0..6 {
            let x = space.vars()[k].clone();
            let y = space.vars()[6 + k].clone();
            swapped = swapped.substitute(&x, &MultiPoly::var(&format!("t{k}")));
            swapped = swapped.substitute(&y, &MultiPoly::var(&x));
            swapped = swapped.substitute(&format!("t{k}"), &MultiPoly::var(&y));
        }
        assert_eq!(swapped, v4);
    }

    #[test]
    fn subpol_members_are_independent() {
        let sys = subpol_system().unwrap();
        assert_eq!(sys.degrees(), &[1, 1, 3, 3, 3, 3, 4]);
        assert!(crate::invariants::check_alg_independent(&sys));
    }

    #[test]
    fn v6_squared_lies_in_the_subring() {
        let sys = subpol_system().unwrap();
        let (_, v6, _) = pencil_v_polys().unwrap();
        let expr = crate::invariants::subring_express(&v6.mul(&v6), &sys).unwrap();
        // Closing the loop: substituting the invariants back recovers v6^2.
        let mut back = expr;
        for (name, inv) in sys.quotient().iter().zip(sys.invariants()) {
            back = back.substitute(name, inv);
        }
        assert_eq!(back, v6.mul(&v6));
    }

    #[test]
    fn semiinvariant_is_the_composed_discriminant() {
        let f = pencil_semiinvariant().unwrap();
        assert_eq!(f.total_degree(), Some(12));
        // f vanishes where the pencil cubic has a double root: at X = Y the
        // cubic is det(X) (u + v)^3.
        let space = PencilSpace::new();
        let mut g = f;
        for k in 0..6 {
            let y = space.vars()[6 + k].clone();
            let x = space.vars()[k].clone();
            g = g.substitute(&y, &MultiPoly::var(&x));
        }
        assert!(g.is_zero());
    }

    #[test]
    fn divisibility_certificate_small_run() {
        let reports = quartic_divisibility_check(&[10007], 3, QUARTIC_SEED).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].failures, 0, "{:?}", reports[0]);
    }

    #[test]
    fn broken_v8_fails_the_certificate() {
        let (v4, v6, v8) = pencil_v_polys().unwrap();
        let bad = v8.add(&MultiPoly::one());
        let reports =
            quartic_divisibility_check_with(&[10007], 3, QUARTIC_SEED, &v4, &v6, &bad)
                .unwrap();
        assert!(reports[0].failures >= 1, "{:?}", reports[0]);
    }

    #[test]
    fn tiny_or_composite_moduli_are_rejected() {
        assert!(quartic_divisibility_check(&[101], 1, QUARTIC_SEED).is_err());
        assert!(quartic_divisibility_check(&[10005], 1, QUARTIC_SEED).is_err());
    }

    #[test]
    #[ignore = "long-running; the composed reduction takes minutes"]
    fn pipeline_reproduces_the_quotient_b_function() {
        let b = pencil_pipeline_l1().unwrap();
        let lin = |num: i64, den: i64| {
            BPoly::from_coeffs(vec![
                crate::exact::RatFunc::from_rational(rat(num, den)),
                crate::exact::RatFunc::one(),
            ])
        };
        let expected = lin(1, 1)
            .mul(&lin(1, 1))
            .mul(&lin(1, 1))
            .mul(&lin(1, 1))
            .mul(&lin(3, 2))
            .mul(&lin(3, 2))
            .mul(&lin(3, 2))
            .mul(&lin(3, 2))
            .mul(&lin(11, 12))
            .mul(&lin(13, 12))
            .mul(&lin(17, 12))
            .mul(&lin(19, 12));
        assert_eq!(b, expected);
    }
}
