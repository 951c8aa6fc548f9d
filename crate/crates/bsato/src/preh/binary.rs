//! Coefficient space of binary forms of one degree, together with the
//! discriminant, the four Euler operators of the natural GL_2 action, the
//! annihilator of the root function h = x_{n-1} + n x_n r, and the ideal
//! that annihilates f^s h.
//!
//! Here r is the algebraic function cut out by
//! x_n r^n + x_{n-1} r^{n-1} + ... + x_1 r + x_0 = 0, realized as an
//! [`AlgExtension`] with the generic form as minimal polynomial.

use std::sync::Arc;

use crate::bfun::{extract_b_multfree, FactoredB};
use crate::error::{Error, Result};
use crate::exact::{MultiPoly, Rational};
use crate::groebner::LeftIdeal;
use crate::nilsson::{apply_weyl_nilsson, AlgExtension, ExtElem, NilssonVector};
use crate::weyl::WeylElement;

/// Degree-n binary forms with coefficient variables x0..xn; the form itself
/// is x_n y^n + ... + x_1 y + x_0 in the auxiliary variable y.
#[derive(Debug, Clone)]
pub struct BinaryFormSpace {
    n: u32,
    vars: Vec<String>,
}

impl BinaryFormSpace {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Mismatch(format!(
                "binary forms need degree at least 2, got {n}"
            )));
        }
        let vars = (0..=n).map(|i| format!("x{i}")).collect();
        Ok(BinaryFormSpace { n, vars })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Coefficient variables x0..xn, indexed by the power of y they carry.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// The generic form as a polynomial in x0..xn and y.
    pub fn generic_form(&self) -> MultiPoly {
        let mut f = MultiPoly::zero();
        for (i, v) in self.vars.iter().enumerate() {
            f = f.add(&MultiPoly::var(v).mul(&MultiPoly::var_pow("y", i as u32)));
        }
        f
    }

    /// The extension generated by the root r of the generic form, named y.
    pub fn root_extension(&self) -> Result<Arc<AlgExtension>> {
        Ok(Arc::new(AlgExtension::new(
            self.vars.clone(),
            "y",
            self.generic_form(),
        )?))
    }

    /// The distinguished root function h = x_{n-1} + n x_n r.
    pub fn h_elem(&self, ext: &Arc<AlgExtension>) -> ExtElem {
        let p = MultiPoly::var(&self.vars[self.n as usize - 1]).add(
            &MultiPoly::var(&self.vars[self.n as usize])
                .scale(&Rational::from_integer((self.n as i64).into()))
                .mul(&MultiPoly::var("y")),
        );
        ExtElem::from_poly(ext, &p)
    }

    /// h as a bare carrier, with no f^s factor in front.
    pub fn root_carrier(&self) -> Result<NilssonVector> {
        let ext = self.root_extension()?;
        let h = self.h_elem(&ext);
        NilssonVector::new(Vec::new(), Vec::new(), Vec::new(), h)
    }

    /// f^s h over the root extension, the carrier annihilated by
    /// [`twisted_ideal`].
    pub fn twisted_carrier(&self) -> Result<NilssonVector> {
        let ext = self.root_extension()?;
        let h = self.h_elem(&ext);
        NilssonVector::new(
            vec![binary_discriminant(self.n)?],
            vec!["s".to_string()],
            vec![Rational::zero()],
            h,
        )
    }
}

/// Discriminant of the generic degree-n form with respect to y, with content
/// reduced to 1 and the sign inherited from the resultant convention.
pub fn binary_discriminant(n: u32) -> Result<MultiPoly> {
    let space = BinaryFormSpace::new(n)?;
    let disc = crate::exact::discriminant(&space.generic_form(), "y")?;
    let content = disc.content();
    Ok(disc.scale(&content.recip()))
}

/// The four Euler operators of gl_2 acting on coefficients:
///
/// * g11 = sum i x_i d_i          (y-degree grading)
/// * g12 = sum (n-i+1) x_{i-1} d_i (raising)
/// * g21 = sum i x_i d_{i-1}       (lowering)
/// * g22 = sum (n-i) x_i d_i       (complementary grading)
pub fn euler_ops(n: u32) -> Result<[WeylElement; 4]> {
    let space = BinaryFormSpace::new(n)?;
    let xs = space.vars().to_vec();
    let zero = WeylElement::new(xs.clone(), Vec::new());
    let mut g11 = zero.clone();
    let mut g12 = zero.clone();
    let mut g21 = zero.clone();
    let mut g22 = zero;
    let term = |i: usize, j: usize, c: i64| {
        WeylElement::x_var(xs.clone(), Vec::new(), &xs[i])
            .mul(&WeylElement::dx_var(xs.clone(), Vec::new(), &xs[j]))
            .scale(&Rational::from_integer(c.into()))
    };
    for i in 1..=n as usize {
        g11 = g11.add(&term(i, i, i as i64));
        g12 = g12.add(&term(i - 1, i, n as i64 - i as i64 + 1));
        g21 = g21.add(&term(i, i - 1, i as i64));
    }
    for i in 0..n as usize {
        g22 = g22.add(&term(i, i, n as i64 - i as i64));
    }
    Ok([g11, g12, g21, g22])
}

/// Generators of the annihilator of h in D_{n+1}: the four Euler operators
/// with their scalar offsets, and the powered second-order minors
/// (d_i d_{j+1} - d_{i+1} d_j)^(1+[j=n-1]) for 0 <= i < j <= n-1.
pub fn annihilator_gens(n: u32) -> Result<LeftIdeal> {
    let space = BinaryFormSpace::new(n)?;
    let xs = space.vars().to_vec();
    let [g11, g12, g21, g22] = euler_ops(n)?;
    let shifted = |g: &WeylElement, c: i64| {
        g.sub(&WeylElement::one(xs.clone(), Vec::new()).scale(&Rational::from_integer(c.into())))
    };
    let mut gens = vec![
        shifted(&g11, n as i64 - 1),
        g12.pow(n - 1),
        g21,
        shifted(&g22, 1),
    ];
    let dx = |i: usize| WeylElement::dx_var(xs.clone(), Vec::new(), &xs[i]);
    for j in 1..n as usize {
        for i in 0..j {
            let minor = dx(i).mul(&dx(j + 1)).sub(&dx(i + 1).mul(&dx(j)));
            let e = if j == n as usize - 1 { 2 } else { 1 };
            gens.push(minor.pow(e));
        }
    }
    LeftIdeal::new(gens)
}

/// Applies every generator of [`annihilator_gens`] to h over the root
/// extension and reports whether all images vanish identically.
pub fn verify_annihilators(n: u32) -> Result<bool> {
    let space = BinaryFormSpace::new(n)?;
    let carrier = space.root_carrier()?;
    annihilates_h(annihilator_gens(n)?.generators(), &carrier)
}

/// True when each operator kills the given carrier exactly.
pub fn annihilates_h(ops: &[WeylElement], carrier: &NilssonVector) -> Result<bool> {
    for op in ops {
        if !apply_weyl_nilsson(op, carrier)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The ideal annihilating f^s h in D_{n+1}[s]: both torus operators are
/// shifted by the weight of f^s h, the raising power and the lowering
/// operator stay as in [`annihilator_gens`]. The shifts are not guessed
/// from a closed formula; they are read off by applying the operators to f
/// and to h, and the returned ideal is certified by checking that every
/// generator kills f^s h before it is handed back.
pub fn twisted_ideal(n: u32) -> Result<LeftIdeal> {
    let space = BinaryFormSpace::new(n)?;
    let xs = space.vars().to_vec();
    let s = vec!["s".to_string()];
    let f = binary_discriminant(n)?;
    let [g11, g12, g21, g22] = euler_ops(n)?;
    let plain = space.root_carrier()?;

    let weight_on_f = |g: &WeylElement| -> Result<Rational> {
        let image = g.apply_poly(&f)?;
        image
            .exact_div(&f)
            .and_then(|q| q.as_constant())
            .ok_or_else(|| {
                Error::VerificationFailure("discriminant is not a torus eigenvector".into())
            })
    };
    let weight_on_h = |g: &WeylElement| -> Result<Rational> {
        let image = apply_weyl_nilsson(g, &plain)?;
        image.scalar_ratio(&plain)?.as_constant().ok_or_else(|| {
            Error::VerificationFailure("root function is not a torus eigenvector".into())
        })
    };

    let twist = |g: &WeylElement, a: Rational, b: Rational| -> Result<WeylElement> {
        let shift = MultiPoly::var("s")
            .scale(&a)
            .add(&MultiPoly::constant(b));
        Ok(g.embed(&xs, &s).sub(&WeylElement::from_poly(&shift, xs.clone(), s.clone())?))
    };

    let gens = vec![
        twist(&g11, weight_on_f(&g11)?, weight_on_h(&g11)?)?,
        g12.pow(n - 1).embed(&xs, &s),
        g21.embed(&xs, &s),
        twist(&g22, weight_on_f(&g22)?, weight_on_h(&g22)?)?,
    ];

    let carrier = space.twisted_carrier()?;
    for g in &gens {
        if !apply_weyl_nilsson(g, &carrier)?.is_zero() {
            return Err(Error::VerificationFailure(format!(
                "twisted generator does not annihilate f^s h: {g}"
            )));
        }
    }
    LeftIdeal::new(gens)
}

/// The b-function of h along the discriminant hypersurface, by the
/// multiplicity-free route: factor list [f], multiplicity 1, carrier f^s h
/// over the root extension. Returns the factored b together with the
/// constant-coefficient certificate operator.
pub fn binary_bfun(n: u32) -> Result<(FactoredB, WeylElement)> {
    let space = BinaryFormSpace::new(n)?;
    let f = binary_discriminant(n)?;
    extract_b_multfree(&[f], &[1], &space.twisted_carrier()?)
}
