//! Resultants via subresultant pseudo-remainder sequences, and the
//! discriminant normalization built on them.

use num::One;

use crate::error::{Error, Result};

use super::multipoly::MultiPoly;
use super::rational::{Rational, rat_int};

/// Resultant of `p` and `q` with respect to `var`, computed over the
/// polynomial ring in the remaining variables. Uses the subresultant PRS to
/// keep intermediate coefficient growth polynomial.
pub fn resultant(p: &MultiPoly, q: &MultiPoly, var: &str) -> MultiPoly {
    if p.is_zero() || q.is_zero() {
        return MultiPoly::zero();
    }
    let dp = p.degree_in(var).unwrap();
    let dq = q.degree_in(var).unwrap();
    if dp == 0 && dq == 0 {
        return MultiPoly::one();
    }
    if dp == 0 {
        return p.pow(dq);
    }
    if dq == 0 {
        return q.pow(dp);
    }
    let mut sign = Rational::one();
    let (mut a, mut b) = (p.clone(), q.clone());
    if dp < dq {
        std::mem::swap(&mut a, &mut b);
        if dp % 2 == 1 && dq % 2 == 1 {
            sign = -sign;
        }
    }
    let mut g = MultiPoly::one();
    let mut h = MultiPoly::one();
    loop {
        let da = a.degree_in(var).unwrap();
        let db = b.degree_in(var).unwrap();
        let delta = da - db;
        if da % 2 == 1 && db % 2 == 1 {
            sign = -sign;
        }
        let r = a.prem(&b, var);
        a = b;
        let scale = g.mul(&h.pow(delta));
        b = r.exact_div(&scale).expect("subresultant scale divides");
        g = a.coeffs_in(var).pop().unwrap();
        h = if delta == 0 {
            h
        } else {
            g.pow(delta)
                .exact_div(&h.pow(delta - 1))
                .expect("subresultant h update divides")
        };
        if b.is_zero() {
            // Positive-degree common factor: resultant vanishes.
            return MultiPoly::zero();
        }
        if b.degree_in(var) == Some(0) {
            let da = a.degree_in(var).unwrap();
            let lc_b = b.coeffs_in(var).pop().unwrap();
            let res = lc_b
                .pow(da)
                .exact_div(&h.pow(da.saturating_sub(1)))
                .expect("final subresultant division divides");
            return res.scale(&sign);
        }
    }
}

/// Discriminant of `p` with respect to `var`:
/// (-1)^(d(d-1)/2) resultant(p, dp/dvar) / lc(p).
pub fn discriminant(p: &MultiPoly, var: &str) -> Result<MultiPoly> {
    let d = p
        .degree_in(var)
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::Mismatch(format!("discriminant needs positive degree in {var}")))?;
    let res = resultant(p, &p.derivative(var), var);
    let lc = p.coeffs_in(var).pop().unwrap();
    let signed = if (d * (d - 1) / 2) % 2 == 1 { res.neg() } else { res };
    signed
        .exact_div(&lc)
        .ok_or_else(|| Error::Mismatch("leading coefficient does not divide resultant".into()))
}

#[allow(dead_code)]
pub(crate) fn disc_sign(d: u32) -> Rational {
    if (d * (d - 1) / 2) % 2 == 1 { rat_int(-1) } else { rat_int(1) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::rat_int;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn p(src: &str) -> MultiPoly {
        MultiPoly::parse(src).unwrap()
    }

    /// Direct Sylvester determinant, cofactor expansion. Exponential, test
    /// oracle only.
    fn sylvester_resultant(a: &MultiPoly, b: &MultiPoly, var: &str) -> MultiPoly {
        let ca = a.coeffs_in(var);
        let cb = b.coeffs_in(var);
        let m = ca.len() - 1;
        let n = cb.len() - 1;
        let size = m + n;
        let mut rows: Vec<Vec<MultiPoly>> = Vec::new();
        for i in 0..n {
            let mut row = vec![MultiPoly::zero(); size];
            for (k, c) in ca.iter().rev().enumerate() {
                row[i + k] = c.clone();
            }
            rows.push(row);
        }
        for i in 0..m {
            let mut row = vec![MultiPoly::zero(); size];
            for (k, c) in cb.iter().rev().enumerate() {
                row[i + k] = c.clone();
            }
            rows.push(row);
        }
        det(&rows)
    }

    fn det(rows: &[Vec<MultiPoly>]) -> MultiPoly {
        let n = rows.len();
        if n == 0 {
            return MultiPoly::one();
        }
        if n == 1 {
            return rows[0][0].clone();
        }
        let mut acc = MultiPoly::zero();
        for (j, e) in rows[0].iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let minor: Vec<Vec<MultiPoly>> = rows[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let term = e.mul(&det(&minor));
            acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    #[test]
    fn matches_sylvester_on_random_inputs() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let da = rng.gen_range(1..=3);
            let db = rng.gen_range(1..=3);
            let mk = |rng: &mut StdRng, d: u32| {
                let mut acc = MultiPoly::zero();
                for k in 0..=d {
                    let c = rat_int(rng.gen_range(-4i64..=4));
                    let t = MultiPoly::constant(c)
                        .mul(&MultiPoly::var_pow("y", k))
                        .mul(&MultiPoly::var_pow("t", rng.gen_range(0..=1)));
                    acc = acc.add(&t);
                }
                // Force the intended degree.
                acc.add(&MultiPoly::var_pow("y", d))
            };
            let a = mk(&mut rng, da);
            let b = mk(&mut rng, db);
            assert_eq!(
                resultant(&a, &b, "y"),
                sylvester_resultant(&a, &b, "y"),
                "a = {a}, b = {b}"
            );
        }
    }

    #[test]
    fn monic_quadratic_discriminant() {
        let f = p("y^2 + b*y + c");
        assert_eq!(discriminant(&f, "y").unwrap(), p("b^2 - 4*c"));
    }

    #[test]
    fn generic_cubic_discriminant() {
        let f = p("x3*y^3 + x2*y^2 + x1*y + x0");
        let expected =
            p("18*x0*x1*x2*x3 - 4*x0*x2^3 + x1^2*x2^2 - 4*x1^3*x3 - 27*x0^2*x3^2");
        assert_eq!(discriminant(&f, "y").unwrap(), expected);
    }

    #[test]
    fn resultant_detects_common_roots() {
        let a = p("y^2 - 1");
        let b = p("y - 1");
        assert_eq!(resultant(&a, &b, "y"), MultiPoly::zero());
        let c = p("y - 2");
        assert_eq!(resultant(&b, &c, "y"), p("-1"));
    }

    #[test]
    fn degree_one_discriminant_is_one() {
        assert_eq!(discriminant(&p("a*y + b"), "y").unwrap(), p("1"));
    }

    #[test]
    fn specialization_commutes_with_resultant() {
        // res(p, q)(t0) = res(p(t0), q(t0)) up to nothing: degrees stay full
        // for these choices, so equality is exact.
        let a = p("y^2 + t*y + 1");
        let b = p("2*y + t");
        let r = resultant(&a, &b, "y");
        let spec = r.substitute("t", &p("3"));
        let a3 = a.substitute("t", &p("3"));
        let b3 = b.substitute("t", &p("3"));
        assert_eq!(spec, resultant(&a3, &b3, "y"));
    }
}
