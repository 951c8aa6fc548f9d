//! Carriers for symbolic powers: vectors of the shape
//!
//!   f_1^(s_1+c_1) * ... * f_l^(s_l+c_l) * u,
//!
//! where u lives either in an algebraic extension of the rational function
//! field (one new symbol y with minimal polynomial P) or in the solution
//! module of an ordinary differential equation in one variable. Weyl
//! operators act on both kinds through the chain rule, which is all the
//! downstream b-function extraction needs.
//!
//! Extension elements are stored as N(x, y) / (lc^a * P_y^e) with N reduced
//! below deg_y P. Differentiation never leaves that shape: with
//! D_i(N) = P_y * dN/dx_i - P_{x_i} * dN/dy the total derivative of y
//! contributes only polynomial data, and the two tracked denominator
//! exponents absorb everything else. No multivariate gcd is ever taken in
//! the differentiation path; trial exact division keeps the exponents small.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{MultiPoly, RatFunc, Rational, rat_int};
use crate::weyl::WeylElement;

/// The field Q(x_1..x_n)[y] / P(y).
#[derive(Debug)]
pub struct AlgExtension {
    x_names: Vec<String>,
    y_name: String,
    minpoly: MultiPoly,
    degree: u32,
    /// Coefficient of y^t in P, a polynomial in x alone.
    lc: MultiPoly,
    /// P minus its leading y-term; what y^t rewrites to (negated, over lc).
    tail: MultiPoly,
    /// dP/dy.
    dy: MultiPoly,
    /// dP/dx_i, indexed like `x_names`.
    px: Vec<MultiPoly>,
    /// D_i(P_y) for each x_i, the polynomial part of the total derivative.
    d_dy: Vec<MultiPoly>,
}

impl AlgExtension {
    pub fn new(x_names: Vec<String>, y_name: &str, minpoly: MultiPoly) -> Result<Self> {
        let mut xs = x_names;
        xs.sort();
        xs.dedup();
        if xs.iter().any(|v| v == y_name) {
            return Err(Error::Mismatch(format!(
                "extension symbol {y_name} collides with a base variable"
            )));
        }
        for v in minpoly.vars() {
            if minpoly.degree_in(v).unwrap_or(0) > 0 && v != y_name && !xs.iter().any(|x| x == v) {
                return Err(Error::Mismatch(format!(
                    "minimal polynomial mentions undeclared variable {v}"
                )));
            }
        }
        let t = minpoly.degree_in(y_name).unwrap_or(0);
        if t == 0 {
            return Err(Error::Mismatch(
                "minimal polynomial must involve the extension symbol".into(),
            ));
        }
        // A repeated root would make the implicit derivative undefined
        // everywhere on a branch.
        if crate::exact::discriminant(&minpoly, y_name)?.is_zero() {
            return Err(Error::NotInvertible(
                "minimal polynomial is not squarefree in the extension symbol".into(),
            ));
        }
        let coeffs = minpoly.coeffs_in(y_name);
        let lc = coeffs[t as usize].clone();
        let tail = minpoly.sub(&lc.mul(&MultiPoly::var_pow(y_name, t)));
        let dy = minpoly.derivative(y_name);
        let px: Vec<MultiPoly> = xs.iter().map(|v| minpoly.derivative(v)).collect();
        let d_dy: Vec<MultiPoly> = xs
            .iter()
            .zip(px.iter())
            .map(|(v, pxi)| dy.mul(&dy.derivative(v)).sub(&pxi.mul(&dy.derivative(y_name))))
            .collect();
        Ok(AlgExtension {
            x_names: xs,
            y_name: y_name.to_string(),
            minpoly,
            degree: t,
            lc,
            tail,
            dy,
            px,
            d_dy,
        })
    }

    /// Degenerate extension P = y: payloads stay honest polynomials and the
    /// calculus collapses to ordinary partial derivatives.
    pub fn trivial(x_names: Vec<String>, y_name: &str) -> Self {
        Self::new(x_names, y_name, MultiPoly::var(y_name)).expect("trivial extension")
    }

    /// Extension by an explicit graph y = g(x), minimal polynomial y - g.
    pub fn graph(x_names: Vec<String>, y_name: &str, g: &MultiPoly) -> Result<Self> {
        Self::new(x_names, y_name, MultiPoly::var(y_name).sub(g))
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn y_name(&self) -> &str {
        &self.y_name
    }

    pub fn minpoly(&self) -> &MultiPoly {
        &self.minpoly
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn x_index(&self, name: &str) -> Option<usize> {
        self.x_names.iter().position(|v| v == name)
    }

    fn same_as(&self, other: &Self) -> bool {
        self.x_names == other.x_names
            && self.y_name == other.y_name
            && self.minpoly == other.minpoly
    }

    /// Rewrites y-powers of degree >= t, reporting how many lc factors the
    /// denominator picked up.
    fn reduce(&self, mut num: MultiPoly) -> (MultiPoly, u32) {
        let mut extra = 0u32;
        loop {
            let d = num.degree_in(&self.y_name).unwrap_or(0);
            if d < self.degree {
                return (num, extra);
            }
            let coeffs = num.coeffs_in(&self.y_name);
            let top = coeffs[d as usize].clone();
            let top_term = top.mul(&MultiPoly::var_pow(&self.y_name, d));
            let rest = num.sub(&top_term);
            // lc * y^d = -tail * y^(d - t), so
            // num -> lc * rest - top * tail * y^(d - t), den gains one lc.
            num = self.lc.mul(&rest).sub(
                &top.mul(&self.tail)
                    .mul(&MultiPoly::var_pow(&self.y_name, d - self.degree)),
            );
            extra += 1;
        }
    }
}

/// Element N / (lc^a * P_y^e) of an algebraic extension; N may also carry
/// parameter variables (the s of the enclosing carrier).
#[derive(Debug, Clone)]
pub struct ExtElem {
    ext: Arc<AlgExtension>,
    num: MultiPoly,
    den_lc: u32,
    den_dy: u32,
}

impl ExtElem {
    pub fn from_poly(ext: &Arc<AlgExtension>, p: &MultiPoly) -> Self {
        let (num, extra) = ext.reduce(p.clone());
        let mut e = ExtElem {
            ext: Arc::clone(ext),
            num,
            den_lc: extra,
            den_dy: 0,
        };
        e.normalize();
        e
    }

    pub fn zero(ext: &Arc<AlgExtension>) -> Self {
        ExtElem {
            ext: Arc::clone(ext),
            num: MultiPoly::zero(),
            den_lc: 0,
            den_dy: 0,
        }
    }

    pub fn one(ext: &Arc<AlgExtension>) -> Self {
        Self::from_poly(ext, &MultiPoly::one())
    }

    pub fn y_elem(ext: &Arc<AlgExtension>) -> Self {
        Self::from_poly(ext, &MultiPoly::var(ext.y_name()))
    }

    pub fn extension(&self) -> &Arc<AlgExtension> {
        &self.ext
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den_powers(&self) -> (u32, u32) {
        (self.den_lc, self.den_dy)
    }

    /// Rewrites the elements over one shared denominator and returns their
    /// numerators as canonical residues. The implicit common denominator is
    /// lc^a * P_y^e with a and e the componentwise maxima, further raised by
    /// whatever lc powers the reductions introduce; since lc is y-free, that
    /// last lift keeps every numerator reduced.
    pub fn common_numerators(elems: &[ExtElem]) -> Result<Vec<MultiPoly>> {
        let Some(first) = elems.first() else {
            return Ok(Vec::new());
        };
        let ext = &first.ext;
        if elems.iter().any(|e| !e.ext.same_as(ext)) {
            return Err(Error::Mismatch(
                "elements live in different extensions".into(),
            ));
        }
        let a_max = elems.iter().map(|e| e.den_lc).max().unwrap();
        let e_max = elems.iter().map(|e| e.den_dy).max().unwrap();
        let reduced: Vec<(MultiPoly, u32)> = elems
            .iter()
            .map(|e| {
                let raw = e
                    .num
                    .mul(&ext.lc.pow(a_max - e.den_lc))
                    .mul(&ext.dy.pow(e_max - e.den_dy));
                ext.reduce(raw)
            })
            .collect();
        let extra_max = reduced.iter().map(|(_, x)| *x).max().unwrap();
        Ok(reduced
            .into_iter()
            .map(|(n, x)| n.mul(&ext.lc.pow(extra_max - x)))
            .collect())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den_lc = 0;
            self.den_dy = 0;
            return;
        }
        while self.den_lc > 0 {
            match self.num.exact_div(&self.ext.lc) {
                Some(q) => {
                    self.num = q;
                    self.den_lc -= 1;
                }
                None => break,
            }
        }
        while self.den_dy > 0 {
            match self.num.exact_div(&self.ext.dy) {
                Some(q) => {
                    self.num = q;
                    self.den_dy -= 1;
                }
                None => break,
            }
        }
    }

    fn check_ext(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ext, &other.ext) || self.ext.same_as(&other.ext) {
            Ok(())
        } else {
            Err(Error::Mismatch(
                "elements live in different extensions".into(),
            ))
        }
    }

    /// Both numerators rescaled to the common denominator.
    fn aligned_nums(&self, other: &Self) -> (MultiPoly, MultiPoly, u32, u32) {
        let a = self.den_lc.max(other.den_lc);
        let e = self.den_dy.max(other.den_dy);
        let lift = |x: &Self| {
            let mut n = x.num.clone();
            if a > x.den_lc {
                n = n.mul(&x.ext.lc.pow(a - x.den_lc));
            }
            if e > x.den_dy {
                n = n.mul(&x.ext.dy.pow(e - x.den_dy));
            }
            n
        };
        (lift(self), lift(other), a, e)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ext(other)?;
        let (na, nb, a, e) = self.aligned_nums(other);
        // Lifting by P_y powers raises the y-degree, so the sum needs another
        // reduction pass.
        let (num, extra) = self.ext.reduce(na.add(&nb));
        let mut r = ExtElem {
            ext: Arc::clone(&self.ext),
            num,
            den_lc: a + extra,
            den_dy: e,
        };
        r.normalize();
        Ok(r)
    }

    pub fn neg(&self) -> Self {
        ExtElem {
            ext: Arc::clone(&self.ext),
            num: self.num.neg(),
            den_lc: self.den_lc,
            den_dy: self.den_dy,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut r = self.clone();
        r.num = r.num.scale(c);
        r.normalize();
        r
    }

    /// Multiplication by a polynomial in x, y, and parameters.
    pub fn mul_poly(&self, p: &MultiPoly) -> Self {
        let (num, extra) = self.ext.reduce(self.num.mul(p));
        let mut r = ExtElem {
            ext: Arc::clone(&self.ext),
            num,
            den_lc: self.den_lc + extra,
            den_dy: self.den_dy,
        };
        r.normalize();
        r
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ext(other)?;
        let (num, extra) = self.ext.reduce(self.num.mul(&other.num));
        let mut r = ExtElem {
            ext: Arc::clone(&self.ext),
            num,
            den_lc: self.den_lc + other.den_lc + extra,
            den_dy: self.den_dy + other.den_dy,
        };
        r.normalize();
        Ok(r)
    }

    /// Total derivative in x_i, differentiating y implicitly through the
    /// minimal polynomial.
    pub fn derive_alg(&self, var: &str) -> Result<Self> {
        let i = self
            .ext
            .x_index(var)
            .ok_or_else(|| Error::Mismatch(format!("variable {var} not in the extension chart")))?;
        let ext = &self.ext;
        let dn = ext
            .dy
            .mul(&self.num.derivative(var))
            .sub(&ext.px[i].mul(&self.num.derivative(&ext.y_name)));
        let mut num = ext.lc.mul(&ext.dy).mul(&dn);
        if self.den_lc > 0 {
            let a = MultiPoly::constant(rat_int(i64::from(self.den_lc)));
            num = num.sub(
                &a.mul(&ext.lc.derivative(var))
                    .mul(&ext.dy)
                    .mul(&ext.dy)
                    .mul(&self.num),
            );
        }
        if self.den_dy > 0 {
            let e = MultiPoly::constant(rat_int(i64::from(self.den_dy)));
            num = num.sub(&e.mul(&ext.lc).mul(&ext.d_dy[i]).mul(&self.num));
        }
        // Stripping shared factors before reduction keeps simple derivatives
        // in lowest terms; reduction would smear them across the terms.
        let mut den_lc = self.den_lc + 1;
        let mut den_dy = self.den_dy + 2;
        while den_lc > 0 {
            match num.exact_div(&ext.lc) {
                Some(q) => {
                    num = q;
                    den_lc -= 1;
                }
                None => break,
            }
        }
        while den_dy > 0 {
            match num.exact_div(&ext.dy) {
                Some(q) => {
                    num = q;
                    den_dy -= 1;
                }
                None => break,
            }
        }
        let (num, extra) = ext.reduce(num);
        let mut r = ExtElem {
            ext: Arc::clone(ext),
            num,
            den_lc: den_lc + extra,
            den_dy,
        };
        r.normalize();
        Ok(r)
    }
}

impl PartialEq for ExtElem {
    fn eq(&self, other: &Self) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }
}

impl Eq for ExtElem {}

impl fmt::Display for ExtElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den_lc == 0 && self.den_dy == 0 {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/(", self.num)?;
        let mut parts = Vec::new();
        if self.den_lc > 0 {
            parts.push(if self.den_lc == 1 {
                format!("({})", self.ext.lc)
            } else {
                format!("({})^{}", self.ext.lc, self.den_lc)
            });
        }
        if self.den_dy > 0 {
            parts.push(if self.den_dy == 1 {
                format!("({})", self.ext.dy)
            } else {
                format!("({})^{}", self.ext.dy, self.den_dy)
            });
        }
        write!(f, "{})", parts.join("*"))
    }
}

/// A symbolic-power carrier f_1^(s_1+c_1) ... f_l^(s_l+c_l) * u.
#[derive(Debug, Clone)]
pub struct NilssonVector {
    factors: Vec<MultiPoly>,
    s_names: Vec<String>,
    shifts: Vec<Rational>,
    payload: ExtElem,
}

impl NilssonVector {
    pub fn new(
        factors: Vec<MultiPoly>,
        s_names: Vec<String>,
        shifts: Vec<Rational>,
        payload: ExtElem,
    ) -> Result<Self> {
        if factors.len() != s_names.len() || factors.len() != shifts.len() {
            return Err(Error::Mismatch(
                "factors, exponent names, and shifts must have matching lengths".into(),
            ));
        }
        if factors.iter().any(MultiPoly::is_zero) {
            return Err(Error::Mismatch("carrier factor must be nonzero".into()));
        }
        Ok(NilssonVector {
            factors,
            s_names,
            shifts,
            payload,
        })
    }

    pub fn factors(&self) -> &[MultiPoly] {
        &self.factors
    }

    pub fn s_names(&self) -> &[String] {
        &self.s_names
    }

    pub fn shifts(&self) -> &[Rational] {
        &self.shifts
    }

    pub fn payload(&self) -> &ExtElem {
        &self.payload
    }

    pub fn is_zero(&self) -> bool {
        self.payload.is_zero()
    }

    pub fn zero_like(&self) -> Self {
        NilssonVector {
            factors: self.factors.clone(),
            s_names: self.s_names.clone(),
            shifts: self.shifts.clone(),
            payload: ExtElem::zero(self.payload.extension()),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.factors != other.factors || self.s_names != other.s_names {
            return Err(Error::Mismatch(
                "carriers are over different factor lists".into(),
            ));
        }
        Ok(())
    }

    /// Componentwise minimum of the two shift vectors, if they differ by
    /// integers.
    fn common_base(&self, other: &Self) -> Result<Vec<Rational>> {
        self.shifts
            .iter()
            .zip(other.shifts.iter())
            .map(|(a, b)| {
                if (a.clone() - b.clone()).is_integer() {
                    Ok(a.min(b).clone())
                } else {
                    Err(Error::Mismatch(
                        "carrier shifts differ by a non-integer".into(),
                    ))
                }
            })
            .collect()
    }

    /// Rewrites the carrier at a lower (componentwise) shift vector, folding
    /// integer factor powers into the payload.
    pub fn with_shifts(&self, base: &[Rational]) -> Result<Self> {
        let mut payload = self.payload.clone();
        for ((f, c), b) in self.factors.iter().zip(self.shifts.iter()).zip(base.iter()) {
            let diff = c.clone() - b.clone();
            if !diff.is_integer() || diff.is_negative() {
                return Err(Error::Mismatch(
                    "target shift must sit a nonnegative integer below".into(),
                ));
            }
            let k = u32::try_from(diff.to_integer())
                .map_err(|_| Error::ResourceLimit("shift realignment too large".into()))?;
            if k > 0 {
                payload = payload.mul_poly(&f.pow(k));
            }
        }
        NilssonVector::new(
            self.factors.clone(),
            self.s_names.clone(),
            base.to_vec(),
            payload,
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let base = self.common_base(other)?;
        let a = self.with_shifts(&base)?;
        let b = other.with_shifts(&base)?;
        NilssonVector::new(a.factors, a.s_names, base, a.payload.add(&b.payload)?)
    }

    pub fn neg(&self) -> Self {
        NilssonVector {
            factors: self.factors.clone(),
            s_names: self.s_names.clone(),
            shifts: self.shifts.clone(),
            payload: self.payload.neg(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        NilssonVector {
            factors: self.factors.clone(),
            s_names: self.s_names.clone(),
            shifts: self.shifts.clone(),
            payload: self.payload.scale(c),
        }
    }

    /// Multiplies the payload by a polynomial (in x, y, and the s names).
    pub fn mul_payload(&self, p: &MultiPoly) -> Self {
        NilssonVector {
            factors: self.factors.clone(),
            s_names: self.s_names.clone(),
            shifts: self.shifts.clone(),
            payload: self.payload.mul_poly(p),
        }
    }

    /// Partial derivative in one x variable, by the chain rule across all
    /// carrier factors and the payload.
    pub fn derivative(&self, var: &str) -> Result<Self> {
        let mut acc: Option<NilssonVector> = None;
        for (i, f) in self.factors.iter().enumerate() {
            let df = f.derivative(var);
            if df.is_zero() {
                continue;
            }
            let exponent =
                MultiPoly::var(&self.s_names[i]).add(&MultiPoly::constant(self.shifts[i].clone()));
            let mut shifts = self.shifts.clone();
            shifts[i] = shifts[i].clone() - Rational::one();
            let term = NilssonVector {
                factors: self.factors.clone(),
                s_names: self.s_names.clone(),
                shifts,
                payload: self.payload.mul_poly(&df.mul(&exponent)),
            };
            acc = Some(match acc {
                None => term,
                Some(v) => v.add(&term)?,
            });
        }
        let inner = NilssonVector {
            factors: self.factors.clone(),
            s_names: self.s_names.clone(),
            shifts: self.shifts.clone(),
            payload: self.payload.derive_alg(var)?,
        };
        Ok(match acc {
            None => inner,
            Some(v) => v.add(&inner)?,
        })
    }

    /// If self equals b * base for a scalar polynomial b in the exponent
    /// names, returns b.
    pub fn scalar_ratio(&self, base: &Self) -> Result<MultiPoly> {
        self.check_compatible(base)?;
        if self.is_zero() {
            return Ok(MultiPoly::zero());
        }
        let common = self.common_base(base).map_err(|_| {
            Error::NotProportional("carrier shifts differ by a non-integer".into())
        })?;
        let a = self.with_shifts(&common)?;
        let b = base.with_shifts(&common)?;
        if b.is_zero() {
            return Err(Error::NotProportional(
                "reference carrier vanishes".into(),
            ));
        }
        let (pa, pb) = (&a.payload, &b.payload);
        let x = pa
            .num
            .mul(&pa.ext.lc.pow(pb.den_lc))
            .mul(&pa.ext.dy.pow(pb.den_dy));
        let y = pb
            .num
            .mul(&pb.ext.lc.pow(pa.den_lc))
            .mul(&pb.ext.dy.pow(pa.den_dy));
        // The P_y lifts raised the y-degree; compare canonical residues.
        let (x_red, ex) = pa.ext.reduce(x);
        let (y_red, ey) = pb.ext.reduce(y);
        let x = x_red.mul(&pa.ext.lc.pow(ey));
        let y = y_red.mul(&pa.ext.lc.pow(ex));
        let ratio = x.exact_div(&y).ok_or_else(|| {
            Error::NotProportional("payload is not a polynomial multiple of the reference".into())
        })?;
        for v in ratio.vars() {
            if ratio.degree_in(v).unwrap_or(0) > 0 && !self.s_names.iter().any(|s| s == v) {
                return Err(Error::NotProportional(format!(
                    "ratio involves {v}, not just the exponent parameters"
                )));
            }
        }
        Ok(ratio)
    }
}

impl fmt::Display for NilssonVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((p, s), c) in self.factors.iter().zip(&self.s_names).zip(&self.shifts) {
            if c.is_zero() {
                write!(f, "({p})^({s}) * ")?;
            } else if c.is_negative() {
                write!(f, "({p})^({s} - {}) * ", -c.clone())?;
            } else {
                write!(f, "({p})^({s} + {c}) * ")?;
            }
        }
        write!(f, "[{}]", self.payload)
    }
}

/// True when the two carriers represent the same vector; shifts may differ
/// by integers. Carriers over different factor lists compare unequal.
pub fn nilsson_equal(a: &NilssonVector, b: &NilssonVector) -> bool {
    match a.sub(b) {
        Ok(d) => d.is_zero(),
        Err(_) => false,
    }
}

/// Applies a Weyl operator to a carrier. Derivative monomials are evaluated
/// through a chain cache so shared prefixes (as in iterated or symmetrized
/// operators) are differentiated once.
pub fn apply_weyl_nilsson(op: &WeylElement, v: &NilssonVector) -> Result<NilssonVector> {
    let names = op.x_names().to_vec();
    for name in &names {
        // A derivative or multiplication in a variable outside the chart has
        // no meaning for this carrier.
        if v.payload.extension().x_index(name).is_none() {
            return Err(Error::Mismatch(format!(
                "operator variable {name} is not in the carrier chart"
            )));
        }
    }
    let mut cache: HashMap<Box<[u32]>, NilssonVector> = HashMap::new();
    cache.insert(vec![0u32; names.len()].into_boxed_slice(), v.clone());
    let mut acc = v.zero_like();
    for ((alpha, beta), coeff) in op.sorted_terms(crate::weyl::MonomialOrder::Block) {
        let derived = derivative_chain(&mut cache, beta, &names)?;
        let mut mono = coeff.clone();
        for (i, &e) in alpha.iter().enumerate() {
            if e > 0 {
                mono = mono.mul(&MultiPoly::var_pow(&names[i], e));
            }
        }
        acc = acc.add(&derived.mul_payload(&mono))?;
    }
    Ok(acc)
}

fn derivative_chain(
    cache: &mut HashMap<Box<[u32]>, NilssonVector>,
    beta: &[u32],
    names: &[String],
) -> Result<NilssonVector> {
    if let Some(hit) = cache.get(beta) {
        return Ok(hit.clone());
    }
    let i = beta
        .iter()
        .rposition(|&e| e > 0)
        .expect("zero multidegree is preseeded");
    let mut pred = beta.to_vec();
    pred[i] -= 1;
    let prev = derivative_chain(cache, &pred, names)?;
    let here = prev.derivative(&names[i])?;
    cache.insert(Box::from(beta), here.clone());
    Ok(here)
}

/// A linear ODE d^r F = a_{r-1} d^(r-1) F + ... + a_0 F with rational
/// function coefficients, used to close derivative computations on a single
/// distinguished solution.
#[derive(Debug, Clone)]
pub struct ODEConnection {
    var: String,
    coeffs: Vec<RatFunc>,
}

impl ODEConnection {
    pub fn new(var: &str, coeffs: Vec<RatFunc>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Mismatch("connection must have positive order".into()));
        }
        Ok(ODEConnection {
            var: var.to_string(),
            coeffs,
        })
    }

    /// Reads the connection off an annihilating operator sum b_i(z) dz^i by
    /// solving for the top derivative.
    pub fn from_operator(op: &WeylElement, var: &str) -> Result<Self> {
        if op.x_names() != [var.to_string()] {
            return Err(Error::Mismatch(
                "connection operator must be univariate in the stated variable".into(),
            ));
        }
        let r = op.order() as usize;
        if r == 0 {
            return Err(Error::Mismatch(
                "connection operator must have positive order".into(),
            ));
        }
        let mut bs = vec![MultiPoly::zero(); r + 1];
        for ((alpha, beta), coeff) in op.sorted_terms(crate::weyl::MonomialOrder::Block) {
            let m = beta[0] as usize;
            let term = coeff.mul(&MultiPoly::var_pow(var, alpha[0]));
            bs[m] = bs[m].add(&term);
        }
        let top = bs.pop().expect("order is positive");
        let coeffs = bs
            .into_iter()
            .map(|b| RatFunc::new(b.neg(), top.clone()))
            .collect::<Result<Vec<_>>>()?;
        ODEConnection::new(var, coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn coeffs(&self) -> &[RatFunc] {
        &self.coeffs
    }

    /// Transports the connection along z -> alpha * z + beta: if F solves
    /// this one, z -> F(alpha z + beta) solves the result.
    pub fn substitute_affine(&self, alpha: &Rational, beta: &Rational) -> Result<Self> {
        if alpha.is_zero() {
            return Err(Error::Mismatch("affine substitution must be invertible".into()));
        }
        let target = MultiPoly::var(&self.var)
            .scale(alpha)
            .add(&MultiPoly::constant(beta.clone()));
        let r = self.coeffs.len();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let moved = a.substitute(&self.var, &target)?;
                // Scale by alpha^(i - r) to account for the chain rule on
                // both sides of the defining relation.
                let mut scaled = moved;
                for _ in 0..(r - i) {
                    scaled = scaled.scale(&(Rational::one() / alpha.clone()));
                }
                Ok(scaled)
            })
            .collect::<Result<Vec<_>>>()?;
        ODEConnection::new(&self.var, coeffs)
    }

    fn same_as(&self, other: &Self) -> bool {
        self.var == other.var && self.coeffs == other.coeffs
    }
}

/// Carrier f(z)^(s+c) * (u_0 F + u_1 F' + ... + u_{r-1} F^(r-1)) over a
/// distinguished ODE solution F. Coordinates are rational functions, so
/// derivatives keep the shift fixed.
#[derive(Debug, Clone)]
pub struct OdeVector {
    conn: Arc<ODEConnection>,
    factor: MultiPoly,
    s_name: String,
    shift: Rational,
    coords: Vec<RatFunc>,
}

impl OdeVector {
    pub fn new(
        conn: &Arc<ODEConnection>,
        factor: MultiPoly,
        s_name: &str,
        shift: Rational,
        coords: Vec<RatFunc>,
    ) -> Result<Self> {
        if coords.len() != conn.order() {
            return Err(Error::Mismatch(
                "coordinate vector length must match the connection order".into(),
            ));
        }
        if factor.is_zero() {
            return Err(Error::Mismatch("carrier factor must be nonzero".into()));
        }
        Ok(OdeVector {
            conn: Arc::clone(conn),
            factor,
            s_name: s_name.to_string(),
            shift,
            coords,
        })
    }

    /// f^s * F itself.
    pub fn base_solution(conn: &Arc<ODEConnection>, factor: MultiPoly, s_name: &str) -> Result<Self> {
        let mut coords = vec![RatFunc::zero(); conn.order()];
        coords[0] = RatFunc::one();
        Self::new(conn, factor, s_name, Rational::zero(), coords)
    }

    pub fn coords(&self) -> &[RatFunc] {
        &self.coords
    }

    pub fn connection(&self) -> &Arc<ODEConnection> {
        &self.conn
    }

    pub fn shift(&self) -> &Rational {
        &self.shift
    }

    pub fn factor(&self) -> &MultiPoly {
        &self.factor
    }

    pub fn s_name(&self) -> &str {
        &self.s_name
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(RatFunc::is_zero)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.conn.same_as(&other.conn)
            || self.factor != other.factor
            || self.s_name != other.s_name
        {
            return Err(Error::Mismatch(
                "vectors are over different connections or factors".into(),
            ));
        }
        Ok(())
    }

    /// Rewrites at a different shift, moving integer powers of the factor in
    /// or out of the coordinates.
    pub fn with_shift(&self, shift: &Rational) -> Result<Self> {
        let diff = self.shift.clone() - shift.clone();
        if !diff.is_integer() {
            return Err(Error::Mismatch(
                "carrier shifts differ by a non-integer".into(),
            ));
        }
        let k = diff.to_integer();
        let f = RatFunc::from_poly(self.factor.clone());
        let mut coords = self.coords.clone();
        let steps = num::abs(k.clone());
        let mut step_count = num::BigInt::from(0u32);
        while step_count < steps {
            for c in coords.iter_mut() {
                *c = if k.is_negative() {
                    c.div(&f)?
                } else {
                    c.mul(&f)
                };
            }
            step_count += 1;
        }
        Self::new(&self.conn, self.factor.clone(), &self.s_name, shift.clone(), coords)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let base = if self.shift <= other.shift {
            self.shift.clone()
        } else {
            other.shift.clone()
        };
        let a = self.with_shift(&base)?;
        let b = other.with_shift(&base)?;
        let coords = a
            .coords
            .iter()
            .zip(b.coords.iter())
            .map(|(x, y)| x.add(y))
            .collect();
        Self::new(&self.conn, self.factor.clone(), &self.s_name, base, coords)
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        for c in r.coords.iter_mut() {
            *c = c.neg();
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale_ratfunc(&self, c: &RatFunc) -> Self {
        let mut r = self.clone();
        for u in r.coords.iter_mut() {
            *u = u.mul(c);
        }
        r
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> Self {
        self.scale_ratfunc(&RatFunc::from_poly(p.clone()))
    }

    /// d/dz across the carrier factor and the coordinates, closing the top
    /// derivative through the connection.
    pub fn derivative(&self) -> Result<Self> {
        let z = self.conn.var.clone();
        let r = self.conn.order();
        let exponent = RatFunc::from_poly(
            MultiPoly::var(&self.s_name).add(&MultiPoly::constant(self.shift.clone())),
        );
        let fratio = RatFunc::new(self.factor.derivative(&z), self.factor.clone())?;
        let outer = exponent.mul(&fratio);
        let mut coords = vec![RatFunc::zero(); r];
        for (i, u) in self.coords.iter().enumerate() {
            // (s + c)(f'/f) u_i and u_i' stay at slot i.
            coords[i] = coords[i].add(&outer.mul(u)).add(&u.derivative(&z));
            // u_i d^(i+1) F shifts up, the top slot folding through the
            // connection coefficients.
            if i + 1 < r {
                coords[i + 1] = coords[i + 1].add(u);
            } else {
                for (j, a) in self.conn.coeffs.iter().enumerate() {
                    coords[j] = coords[j].add(&u.mul(a));
                }
            }
        }
        Self::new(
            &self.conn,
            self.factor.clone(),
            &self.s_name,
            self.shift.clone(),
            coords,
        )
    }
}

/// Applies a Weyl operator in the connection variable to an ODE carrier.
pub fn apply_weyl_ode(op: &WeylElement, v: &OdeVector) -> Result<OdeVector> {
    if op.x_names() != [v.conn.var.clone()] {
        return Err(Error::Mismatch(
            "operator must be univariate in the connection variable".into(),
        ));
    }
    let max_order = op.order() as usize;
    let mut derivs = Vec::with_capacity(max_order + 1);
    derivs.push(v.clone());
    for m in 0..max_order {
        let next = derivs[m].derivative()?;
        derivs.push(next);
    }
    let mut acc: Option<OdeVector> = None;
    for ((alpha, beta), coeff) in op.sorted_terms(crate::weyl::MonomialOrder::Block) {
        let mono = coeff.mul(&MultiPoly::var_pow(&v.conn.var, alpha[0]));
        let term = derivs[beta[0] as usize].mul_poly(&mono);
        acc = Some(match acc {
            None => term,
            Some(w) => w.add(&term)?,
        });
    }
    Ok(match acc {
        None => {
            let mut z = v.clone();
            for c in z.coords.iter_mut() {
                *c = RatFunc::zero();
            }
            z
        }
        Some(w) => w,
    })
}
