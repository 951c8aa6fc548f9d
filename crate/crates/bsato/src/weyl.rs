//! The Weyl algebra D_n over Q, extended by central parameters s_1..s_l.
//!
//! Elements are kept in normal order: every term is coeff(s) * x^alpha *
//! dx^beta with the coefficient a polynomial in the parameters. Products are
//! expanded through the closed Leibniz form
//!
//!   dx^b * x^a = sum_k C(b,k) * falling(a,k) * x^(a-k) * dx^(b-k),
//!
//! applied componentwise, so no rewriting by single commutators is needed.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{MultiPoly, Rational, binomial, cmp_grevlex, falling};

/// Term order on commutative monomials (alpha, beta) in x and dx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonomialOrder {
    /// Graded reverse lexicographic on the concatenated (dx, x) exponent
    /// vector.
    DegRevLex,
    /// dx-block grevlex first, ties broken by x-block grevlex. This is the
    /// default: it makes leading terms pick out the highest-order derivative
    /// part, which is what the Groebner layer wants.
    #[default]
    Block,
}

impl MonomialOrder {
    pub fn cmp(&self, a: &(Box<[u32]>, Box<[u32]>), b: &(Box<[u32]>, Box<[u32]>)) -> Ordering {
        match self {
            MonomialOrder::DegRevLex => {
                let ja: Vec<u32> = a.1.iter().chain(a.0.iter()).copied().collect();
                let jb: Vec<u32> = b.1.iter().chain(b.0.iter()).copied().collect();
                cmp_grevlex(&ja, &jb)
            }
            MonomialOrder::Block => cmp_grevlex(&a.1, &b.1).then_with(|| cmp_grevlex(&a.0, &b.0)),
        }
    }
}

/// Normal-ordered element of D_n[s_1..s_l].
#[derive(Debug, Clone)]
pub struct WeylElement {
    x_names: Vec<String>,
    s_names: Vec<String>,
    /// (x exponents, dx exponents) -> coefficient polynomial in the s names.
    terms: HashMap<(Box<[u32]>, Box<[u32]>), MultiPoly>,
}

fn sorted_dedup(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v.dedup();
    v
}

impl WeylElement {
    pub fn new(x_names: Vec<String>, s_names: Vec<String>) -> Self {
        WeylElement {
            x_names: sorted_dedup(x_names),
            s_names: sorted_dedup(s_names),
            terms: HashMap::new(),
        }
    }

    pub fn zero_like(&self) -> Self {
        WeylElement {
            x_names: self.x_names.clone(),
            s_names: self.s_names.clone(),
            terms: HashMap::new(),
        }
    }

    pub fn one(x_names: Vec<String>, s_names: Vec<String>) -> Self {
        let mut w = Self::new(x_names, s_names);
        let n = w.x_names.len();
        w.terms.insert(
            (vec![0; n].into_boxed_slice(), vec![0; n].into_boxed_slice()),
            MultiPoly::one(),
        );
        w
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn s_names(&self) -> &[String] {
        &self.s_names
    }

    pub fn num_vars(&self) -> usize {
        self.x_names.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Single generator x_i.
    pub fn x_var(x_names: Vec<String>, s_names: Vec<String>, name: &str) -> Self {
        let mut w = Self::new(x_names, s_names);
        let i = w.x_index(name).expect("unknown x variable");
        let n = w.x_names.len();
        let mut a = vec![0u32; n];
        a[i] = 1;
        w.terms.insert(
            (a.into_boxed_slice(), vec![0; n].into_boxed_slice()),
            MultiPoly::one(),
        );
        w
    }

    /// Single generator dx_i.
    pub fn dx_var(x_names: Vec<String>, s_names: Vec<String>, name: &str) -> Self {
        let mut w = Self::new(x_names, s_names);
        let i = w.x_index(name).expect("unknown x variable");
        let n = w.x_names.len();
        let mut b = vec![0u32; n];
        b[i] = 1;
        w.terms.insert(
            (vec![0; n].into_boxed_slice(), b.into_boxed_slice()),
            MultiPoly::one(),
        );
        w
    }

    pub fn x_index(&self, name: &str) -> Option<usize> {
        self.x_names.iter().position(|v| v == name)
    }

    /// Embeds a polynomial in the x and s variables as a multiplication
    /// operator. Unknown variables are rejected.
    pub fn from_poly(p: &MultiPoly, x_names: Vec<String>, s_names: Vec<String>) -> Result<Self> {
        let mut w = Self::new(x_names, s_names);
        let n = w.x_names.len();
        for (mono, coeff) in p.sorted_terms() {
            let mut alpha = vec![0u32; n];
            let mut s_exps: Vec<(usize, u32)> = Vec::new();
            for (j, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = &p.vars()[j];
                if let Some(i) = w.x_index(name) {
                    alpha[i] = e;
                } else if let Some(k) = w.s_names.iter().position(|v| v == name) {
                    s_exps.push((k, e));
                } else {
                    return Err(Error::Mismatch(format!("variable {name} not declared")));
                }
            }
            let mut c = MultiPoly::constant(coeff.clone());
            for (k, e) in s_exps {
                c = c.mul(&MultiPoly::var_pow(&w.s_names[k], e));
            }
            w.add_term(alpha.into_boxed_slice(), vec![0; n].into_boxed_slice(), c);
        }
        Ok(w)
    }

    /// The operator f(dx) obtained by substituting dx_i for x_i.
    pub fn dual_operator(f: &MultiPoly, x_names: Vec<String>, s_names: Vec<String>) -> Result<Self> {
        let as_mult = Self::from_poly(f, x_names, s_names)?;
        let mut w = as_mult.zero_like();
        for ((a, b), c) in as_mult.terms {
            debug_assert!(b.iter().all(|&e| e == 0));
            w.add_term(b, a, c);
        }
        Ok(w)
    }

    /// Builds an element from explicit normal-ordered terms. Exponent slices
    /// must match the (sorted) x variable count; duplicate keys accumulate.
    pub fn from_terms<I>(x_names: Vec<String>, s_names: Vec<String>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<u32>, MultiPoly)>,
    {
        let mut w = Self::new(x_names, s_names);
        let n = w.x_names.len();
        for (alpha, beta, coeff) in terms {
            debug_assert_eq!(alpha.len(), n);
            debug_assert_eq!(beta.len(), n);
            w.add_term(alpha.into_boxed_slice(), beta.into_boxed_slice(), coeff);
        }
        w
    }

    fn add_term(&mut self, alpha: Box<[u32]>, beta: Box<[u32]>, coeff: MultiPoly) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry((alpha, beta)) {
            Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    /// Aligns two elements over the union of their x and s variable sets.
    pub fn align(&self, other: &Self) -> (Self, Self) {
        if self.x_names == other.x_names && self.s_names == other.s_names {
            return (self.clone(), other.clone());
        }
        let mut xs = self.x_names.clone();
        xs.extend(other.x_names.iter().cloned());
        let xs = sorted_dedup(xs);
        let mut ss = self.s_names.clone();
        ss.extend(other.s_names.iter().cloned());
        let ss = sorted_dedup(ss);
        (self.embed(&xs, &ss), other.embed(&xs, &ss))
    }

    pub fn embed(&self, x_names: &[String], s_names: &[String]) -> Self {
        let map: Vec<usize> = self
            .x_names
            .iter()
            .map(|v| {
                x_names
                    .iter()
                    .position(|w| w == v)
                    .expect("x variable missing from target")
            })
            .collect();
        let n = x_names.len();
        let mut w = WeylElement {
            x_names: x_names.to_vec(),
            s_names: s_names.to_vec(),
            terms: HashMap::with_capacity(self.terms.len()),
        };
        for ((a, b), c) in &self.terms {
            let mut alpha = vec![0u32; n];
            let mut beta = vec![0u32; n];
            for (i, (&ea, &eb)) in a.iter().zip(b.iter()).enumerate() {
                alpha[map[i]] = ea;
                beta[map[i]] = eb;
            }
            w.terms
                .insert((alpha.into_boxed_slice(), beta.into_boxed_slice()), c.clone());
        }
        w
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = self.align(other);
        for (k, c) in b.terms {
            let entry = a.terms.entry(k).or_insert_with(MultiPoly::zero);
            *entry = entry.add(&c);
        }
        a.terms.retain(|_, c| !c.is_zero());
        a
    }

    pub fn neg(&self) -> Self {
        let mut w = self.clone();
        for c in w.terms.values_mut() {
            *c = c.neg();
        }
        w
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return self.zero_like();
        }
        let mut w = self.clone();
        for v in w.terms.values_mut() {
            *v = v.scale(c);
        }
        w
    }

    /// Multiplies every coefficient by a polynomial in the s parameters.
    pub fn scale_s(&self, c: &MultiPoly) -> Self {
        if c.is_zero() {
            return self.zero_like();
        }
        let mut w = self.clone();
        for v in w.terms.values_mut() {
            *v = v.mul(c);
        }
        w.terms.retain(|_, v| !v.is_zero());
        w
    }

    /// Noncommutative product, fully normal-ordered.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.align(other);
        let n = a.x_names.len();
        let mut out = a.zero_like();
        for ((a1, b1), c1) in &a.terms {
            for ((a2, b2), c2) in &b.terms {
                let coeff = c1.mul(c2);
                // Enumerate k <= min(b1, a2) componentwise.
                let maxk: Vec<u32> = b1.iter().zip(a2.iter()).map(|(&x, &y)| x.min(y)).collect();
                let mut k = vec![0u32; n];
                loop {
                    let mut scalar = Rational::one();
                    for i in 0..n {
                        if k[i] > 0 {
                            scalar = scalar
                                * Rational::from_integer(binomial(b1[i], k[i]))
                                * Rational::from_integer(falling(a2[i], k[i]));
                        }
                    }
                    if !scalar.is_zero() {
                        let alpha: Vec<u32> = (0..n).map(|i| a1[i] + a2[i] - k[i]).collect();
                        let beta: Vec<u32> = (0..n).map(|i| b1[i] - k[i] + b2[i]).collect();
                        out.add_term(
                            alpha.into_boxed_slice(),
                            beta.into_boxed_slice(),
                            coeff.scale(&scalar),
                        );
                    }
                    // Odometer increment over the box [0, maxk].
                    let mut i = 0;
                    loop {
                        if i == n {
                            break;
                        }
                        if k[i] < maxk[i] {
                            k[i] += 1;
                            break;
                        }
                        k[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                }
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = WeylElement::one(self.x_names.clone(), self.s_names.clone());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Maximal total dx-degree.
    pub fn order(&self) -> u32 {
        self.terms
            .keys()
            .map(|(_, b)| b.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Maximal total x-degree.
    pub fn x_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|(a, _)| a.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Applies the operator to a polynomial in the x (and s) variables.
    pub fn apply_poly(&self, p: &MultiPoly) -> Result<MultiPoly> {
        for v in p.vars() {
            if p.degree_in(v).unwrap_or(0) > 0
                && self.x_index(v).is_none()
                && !self.s_names.iter().any(|s| s == v)
            {
                return Err(Error::Mismatch(format!("variable {v} not declared")));
            }
        }
        let mut acc = MultiPoly::zero();
        for ((alpha, beta), coeff) in &self.terms {
            let mut q = p.clone();
            for (i, &e) in beta.iter().enumerate() {
                for _ in 0..e {
                    q = q.derivative(&self.x_names[i]);
                    if q.is_zero() {
                        break;
                    }
                }
                if q.is_zero() {
                    break;
                }
            }
            if q.is_zero() {
                continue;
            }
            for (i, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    q = q.mul(&MultiPoly::var_pow(&self.x_names[i], e));
                }
            }
            acc = acc.add(&q.mul(coeff));
        }
        Ok(acc)
    }

    /// The formal Fourier transform: x_i maps to dx_i and dx_i to -x_i,
    /// extended as an algebra homomorphism.
    pub fn fourier(&self) -> Self {
        let mut out = self.zero_like();
        let n = self.x_names.len();
        for ((alpha, beta), coeff) in &self.terms {
            // Image of x^alpha * dx^beta is dx^alpha * (-x)^beta, normal
            // ordered by one Weyl product.
            let mut lhs = self.zero_like();
            lhs.terms.insert(
                (vec![0; n].into_boxed_slice(), alpha.clone()),
                coeff.clone(),
            );
            let mut rhs = self.zero_like();
            let sign = if beta.iter().sum::<u32>() % 2 == 1 {
                -Rational::one()
            } else {
                Rational::one()
            };
            rhs.terms.insert(
                (beta.clone(), vec![0; n].into_boxed_slice()),
                MultiPoly::constant(sign),
            );
            out = out.add(&lhs.mul(&rhs));
        }
        out
    }

    /// Substitution x -> -x, dx -> -dx (an algebra automorphism and the
    /// square of `fourier`).
    pub fn sign_flip(&self) -> Self {
        let mut out = self.zero_like();
        for ((alpha, beta), coeff) in &self.terms {
            let deg = alpha.iter().sum::<u32>() + beta.iter().sum::<u32>();
            let c = if deg % 2 == 1 { coeff.neg() } else { coeff.clone() };
            out.terms.insert((alpha.clone(), beta.clone()), c);
        }
        out
    }

    /// Terms sorted descending under the given order.
    pub fn sorted_terms(&self, order: MonomialOrder) -> Vec<(&(Box<[u32]>, Box<[u32]>), &MultiPoly)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| order.cmp(b.0, a.0));
        v
    }

    pub fn leading_term(&self, order: MonomialOrder) -> Option<((Box<[u32]>, Box<[u32]>), MultiPoly)> {
        self.terms
            .iter()
            .max_by(|a, b| order.cmp(a.0, b.0))
            .map(|(k, v)| (k.clone(), v.clone()))
    }

    pub fn coeff_of(&self, key: &(Box<[u32]>, Box<[u32]>)) -> Option<&MultiPoly> {
        self.terms.get(key)
    }

    /// When the element is a pure multiplication operator, its polynomial.
    pub fn as_poly(&self) -> Option<MultiPoly> {
        let mut acc = MultiPoly::zero();
        for ((alpha, beta), coeff) in &self.terms {
            if beta.iter().any(|&e| e > 0) {
                return None;
            }
            let mut t = coeff.clone();
            for (i, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&MultiPoly::var_pow(&self.x_names[i], e));
                }
            }
            acc = acc.add(&t);
        }
        Some(acc)
    }

    /// When the element is a scalar in Q[s], that scalar.
    pub fn as_scalar(&self) -> Option<MultiPoly> {
        if self
            .terms
            .keys()
            .all(|(a, b)| a.iter().all(|&e| e == 0) && b.iter().all(|&e| e == 0))
        {
            let mut acc = MultiPoly::zero();
            for c in self.terms.values() {
                acc = acc.add(c);
            }
            Some(acc)
        } else {
            None
        }
    }

    /// Left multiplication by a single monomial term coeff(s) x^a dx^b.
    pub fn mul_term_left(&self, alpha: &[u32], beta: &[u32], coeff: &MultiPoly) -> Self {
        let n = self.x_names.len();
        debug_assert_eq!(alpha.len(), n);
        let mut lhs = self.zero_like();
        lhs.terms.insert(
            (Box::from(alpha), Box::from(beta)),
            coeff.clone(),
        );
        lhs.mul(self)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Parses the operator text format. Identifiers must be declared x
    /// variables, `d` + x variable for derivatives, or declared s parameters;
    /// products are evaluated left to right in the Weyl algebra, so input
    /// need not be normal ordered.
    pub fn parse(src: &str, x_names: &[String], s_names: &[String]) -> Result<Self> {
        parse_weyl(src, x_names, s_names)
    }
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.align(other);
        if a.terms.len() != b.terms.len() {
            return false;
        }
        a.terms.iter().all(|(k, v)| b.terms.get(k) == Some(v))
    }
}

impl Eq for WeylElement {}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let terms = self.sorted_terms(MonomialOrder::default());
        let mut first = true;
        for ((alpha, beta), coeff) in terms {
            let mut mono_pieces: Vec<String> = Vec::new();
            for (i, &e) in alpha.iter().enumerate() {
                match e {
                    0 => {}
                    1 => mono_pieces.push(self.x_names[i].clone()),
                    _ => mono_pieces.push(format!("{}^{}", self.x_names[i], e)),
                }
            }
            for (i, &e) in beta.iter().enumerate() {
                match e {
                    0 => {}
                    1 => mono_pieces.push(format!("d{}", self.x_names[i])),
                    _ => mono_pieces.push(format!("d{}^{}", self.x_names[i], e)),
                }
            }
            // A coefficient that is a single monomial merges into the sign
            // logic; anything else is parenthesized.
            let (sign_neg, coeff_text) = if coeff.num_terms() == 1 {
                let txt = coeff.to_string();
                match txt.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, txt),
                }
            } else {
                (false, format!("({coeff})"))
            };
            if first {
                if sign_neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if sign_neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = coeff_text == "1";
            if coeff_is_one && mono_pieces.is_empty() {
                write!(f, "1")?;
            } else if coeff_is_one {
                write!(f, "{}", mono_pieces.join("*"))?;
            } else if mono_pieces.is_empty() {
                write!(f, "{coeff_text}")?;
            } else {
                write!(f, "{}*{}", coeff_text, mono_pieces.join("*"))?;
            }
        }
        Ok(())
    }
}

fn parse_weyl(src: &str, x_names: &[String], s_names: &[String]) -> Result<WeylElement> {
    let toks = crate::exact::tokens(src)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty operator".into()));
    }
    let mut p = WeylParser {
        toks: &toks,
        pos: 0,
        x_names,
        s_names,
    };
    let w = p.expr()?;
    if p.pos != toks.len() {
        return Err(Error::Parse("trailing operator input".into()));
    }
    Ok(w)
}

struct WeylParser<'a> {
    toks: &'a [crate::exact::Token],
    pos: usize,
    x_names: &'a [String],
    s_names: &'a [String],
}

impl<'a> WeylParser<'a> {
    fn base(&self) -> WeylElement {
        WeylElement::new(self.x_names.to_vec(), self.s_names.to_vec())
    }

    fn peek(&self) -> Option<&crate::exact::Token> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<crate::exact::Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<WeylElement> {
        use crate::exact::Token::*;
        let mut acc = match self.peek() {
            Some(Minus) => {
                self.bump();
                self.term()?.neg()
            }
            Some(Plus) => {
                self.bump();
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<WeylElement> {
        use crate::exact::Token::Star;
        let mut acc = self.factor()?;
        while let Some(Star) = self.peek() {
            self.bump();
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<WeylElement> {
        use crate::exact::Token::{Caret, Number};
        let base = self.atom()?;
        if let Some(Caret) = self.peek() {
            self.bump();
            match self.bump() {
                Some(Number(r)) if r.denom().is_one() && !r.is_negative() => {
                    let e = u32::try_from(r.numer().clone())
                        .map_err(|_| Error::Parse("exponent too large".into()))?;
                    return Ok(base.pow(e));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "expected nonnegative integer exponent, found {other:?}"
                    )));
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<WeylElement> {
        use crate::exact::Token::*;
        match self.bump() {
            Some(Number(r)) => {
                let mut w = WeylElement::one(self.x_names.to_vec(), self.s_names.to_vec());
                w = w.scale(&r);
                Ok(w)
            }
            Some(Ident(name)) => {
                if self.x_names.iter().any(|v| *v == name) {
                    return Ok(WeylElement::x_var(
                        self.x_names.to_vec(),
                        self.s_names.to_vec(),
                        &name,
                    ));
                }
                if let Some(tail) = name.strip_prefix('d') {
                    if self.x_names.iter().any(|v| v == tail) {
                        return Ok(WeylElement::dx_var(
                            self.x_names.to_vec(),
                            self.s_names.to_vec(),
                            tail,
                        ));
                    }
                }
                if self.s_names.iter().any(|v| *v == name) {
                    let mut w = self.base();
                    let n = w.x_names.len();
                    w.terms.insert(
                        (vec![0; n].into_boxed_slice(), vec![0; n].into_boxed_slice()),
                        MultiPoly::var(&name),
                    );
                    return Ok(w);
                }
                Err(Error::Parse(format!("unknown symbol {name}")))
            }
            Some(Minus) => Ok(self.factor()?.neg()),
            Some(LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(RParen) => Ok(inner),
                    _ => Err(Error::Parse("unbalanced parenthesis in operator".into())),
                }
            }
            other => Err(Error::Parse(format!("unexpected operator token {other:?}"))),
        }
    }
}
