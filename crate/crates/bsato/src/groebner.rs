//! Left Groebner bases over D_n[s] and the normal-form route to b-functions.
//!
//! Coefficients live in Q[s_1..s_l] with the s parameters central. Bases are
//! computed fraction-free: reduction never inverts a nonconstant polynomial
//! in s. Where a field-coefficient algorithm would divide, the element being
//! reduced is cross-multiplied instead and the accumulated multiplier is
//! tracked, so every intermediate stays in Q[s] while the result agrees with
//! the basis over Q(s) up to units.

use std::collections::HashSet;

use num::One;

use crate::bfun::BPoly;
use crate::error::{Error, Result};
use crate::exact::MultiPoly;
use crate::weyl::{MonomialOrder, WeylElement};

/// Commutative monomial key of a normal-ordered term: x exponents, then dx.
type Key = (Box<[u32]>, Box<[u32]>);

const DEFAULT_STEP_BUDGET: u64 = 8_000_000;
const MAX_BASIS: usize = 4096;

struct Budget {
    left: u64,
}

impl Budget {
    fn new(left: u64) -> Self {
        Budget { left }
    }

    fn spend(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::ResourceLimit(
                "Groebner reduction step budget exhausted".into(),
            ));
        }
        self.left -= 1;
        Ok(())
    }
}

fn key_divides(d: &Key, m: &Key) -> bool {
    d.0.iter().zip(m.0.iter()).all(|(a, b)| a <= b)
        && d.1.iter().zip(m.1.iter()).all(|(a, b)| a <= b)
}

fn key_lcm(a: &Key, b: &Key) -> Key {
    (
        a.0.iter().zip(b.0.iter()).map(|(x, y)| *x.max(y)).collect(),
        a.1.iter().zip(b.1.iter()).map(|(x, y)| *x.max(y)).collect(),
    )
}

fn key_sub(m: &Key, d: &Key) -> (Vec<u32>, Vec<u32>) {
    (
        m.0.iter().zip(d.0.iter()).map(|(a, b)| a - b).collect(),
        m.1.iter().zip(d.1.iter()).map(|(a, b)| a - b).collect(),
    )
}

fn key_coprime(a: &Key, b: &Key) -> bool {
    a.0.iter().zip(b.0.iter()).all(|(x, y)| *x == 0 || *y == 0)
        && a.1.iter().zip(b.1.iter()).all(|(x, y)| *x == 0 || *y == 0)
}

fn key_degree(k: &Key) -> u32 {
    k.0.iter().sum::<u32>() + k.1.iter().sum::<u32>()
}

/// Finitely generated left ideal of D_n[s_1..s_l].
#[derive(Debug, Clone)]
pub struct LeftIdeal {
    generators: Vec<WeylElement>,
}

impl LeftIdeal {
    /// Stores the generators over the union of their variable sets. Empty
    /// lists and zero generators are rejected.
    pub fn new(generators: Vec<WeylElement>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Mismatch("ideal needs at least one generator".into()));
        }
        if let Some(i) = generators.iter().position(WeylElement::is_zero) {
            return Err(Error::Mismatch(format!("ideal generator {i} is zero")));
        }
        let mut model = generators[0].clone();
        for g in &generators[1..] {
            (model, _) = model.align(g);
        }
        let xs = model.x_names().to_vec();
        let ss = model.s_names().to_vec();
        let generators = generators.iter().map(|g| g.embed(&xs, &ss)).collect();
        Ok(LeftIdeal { generators })
    }

    pub fn generators(&self) -> &[WeylElement] {
        &self.generators
    }
}

/// Output of Buchberger completion, tagged with the order that produced it.
#[derive(Debug, Clone)]
pub struct GroebnerBasis {
    elements: Vec<WeylElement>,
    order: MonomialOrder,
    reduced: bool,
}

impl GroebnerBasis {
    pub fn elements(&self) -> &[WeylElement] {
        &self.elements
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }
}

fn lt_of(w: &WeylElement, order: MonomialOrder) -> (Key, MultiPoly) {
    w.leading_term(order).expect("element is nonzero")
}

/// Scales an element so its coefficients have no common Q[s] factor and the
/// leading coefficient has leading rational 1.
fn normalize(w: &WeylElement, order: MonomialOrder) -> WeylElement {
    if w.is_zero() {
        return w.clone();
    }
    let mut content = MultiPoly::zero();
    for (_, c) in w.sorted_terms(order) {
        content = content.gcd(c);
        if content.is_one() {
            break;
        }
    }
    let stripped = if content.is_one() {
        w.clone()
    } else {
        WeylElement::from_terms(
            w.x_names().to_vec(),
            w.s_names().to_vec(),
            w.sorted_terms(order).into_iter().map(|(k, c)| {
                (
                    k.0.to_vec(),
                    k.1.to_vec(),
                    c.exact_div(&content).expect("content divides"),
                )
            }),
        )
    };
    let (_, lc) = lt_of(&stripped, order);
    let lead = lc.leading_coeff();
    if lead.is_one() {
        stripped
    } else {
        stripped.scale(&lead.recip())
    }
}

/// Fraction-free full reduction. Returns the remainder together with the
/// polynomial in s the input was implicitly multiplied by along the way, so
/// that lambda * w is congruent to the remainder modulo the basis.
fn reduce_full(
    w: &WeylElement,
    basis: &[WeylElement],
    lts: &[(Key, MultiPoly)],
    order: MonomialOrder,
    budget: &mut Budget,
) -> Result<(WeylElement, MultiPoly)> {
    let mut rem = w.clone();
    let mut lambda = MultiPoly::one();
    loop {
        let mut target = None;
        for (key, coeff) in rem.sorted_terms(order) {
            if let Some(i) = lts.iter().position(|(lk, _)| key_divides(lk, key)) {
                target = Some((key.clone(), coeff.clone(), i));
                break;
            }
        }
        let Some((key, coeff, i)) = target else {
            return Ok((rem, lambda));
        };
        budget.spend()?;
        let (lk, lc) = &lts[i];
        let g0 = coeff.gcd(lc);
        let mut q = coeff.exact_div(&g0).expect("gcd divides");
        let mut m = lc.exact_div(&g0).expect("gcd divides");
        if let Some(c) = m.as_constant() {
            if !c.is_one() {
                q = q.scale(&c.recip());
                m = MultiPoly::one();
            }
        }
        if !m.is_one() {
            rem = rem.scale_s(&m);
            lambda = lambda.mul(&m);
        }
        let (da, db) = key_sub(&key, lk);
        rem = rem.sub(&basis[i].mul_term_left(&da, &db, &q));
    }
}

/// Left S-pair with cross-multiplied Q[s] leading coefficients. The two top
/// terms cancel exactly; the noncommutative corrections are strictly smaller.
fn s_pair(
    f: &WeylElement,
    fl: &(Key, MultiPoly),
    g: &WeylElement,
    gl: &(Key, MultiPoly),
) -> WeylElement {
    let l = key_lcm(&fl.0, &gl.0);
    let g0 = fl.1.gcd(&gl.1);
    let mf = gl.1.exact_div(&g0).expect("gcd divides");
    let mg = fl.1.exact_div(&g0).expect("gcd divides");
    let (fa, fb) = key_sub(&l, &fl.0);
    let (ga, gb) = key_sub(&l, &gl.0);
    f.mul_term_left(&fa, &fb, &mf)
        .sub(&g.mul_term_left(&ga, &gb, &mg))
}

fn element_sugar(w: &WeylElement, order: MonomialOrder) -> u32 {
    w.sorted_terms(order)
        .iter()
        .map(|(k, c)| key_degree(k) + c.total_degree().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Key,
    sugar: u32,
}

fn push_element(
    el: WeylElement,
    sugar: u32,
    order: MonomialOrder,
    basis: &mut Vec<WeylElement>,
    lts: &mut Vec<(Key, MultiPoly)>,
    sugars: &mut Vec<u32>,
    pending: &mut Vec<Pair>,
) -> Result<()> {
    if basis.len() >= MAX_BASIS {
        return Err(Error::ResourceLimit(format!(
            "intermediate basis grew past {MAX_BASIS} elements"
        )));
    }
    let lt = lt_of(&el, order);
    let j = basis.len();
    for i in 0..j {
        let lcm = key_lcm(&lts[i].0, &lt.0);
        let sugar_pair = (sugars[i] + key_degree(&lcm) - key_degree(&lts[i].0))
            .max(sugar + key_degree(&lcm) - key_degree(&lt.0));
        pending.push(Pair {
            i,
            j,
            lcm,
            sugar: sugar_pair,
        });
    }
    basis.push(el);
    lts.push(lt);
    sugars.push(sugar);
    Ok(())
}

/// Sugar-first pair selection with deterministic tie-breaks.
fn select_pair(pending: &[Pair], order: MonomialOrder) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, p) in pending.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let q = &pending[b];
                p.sugar
                    .cmp(&q.sugar)
                    .then_with(|| order.cmp(&p.lcm, &q.lcm))
                    .then_with(|| p.i.cmp(&q.i))
                    .then_with(|| p.j.cmp(&q.j))
                    .is_lt()
            }
        };
        if better {
            best = Some(idx);
        }
    }
    best
}

pub fn left_groebner(ideal: &LeftIdeal, order: MonomialOrder) -> Result<GroebnerBasis> {
    left_groebner_budgeted(ideal, order, DEFAULT_STEP_BUDGET)
}

/// Buchberger completion with an explicit reduction-step budget. Exceeding
/// the budget aborts with `Error::ResourceLimit`.
pub fn left_groebner_budgeted(
    ideal: &LeftIdeal,
    order: MonomialOrder,
    max_steps: u64,
) -> Result<GroebnerBasis> {
    let mut budget = Budget::new(max_steps);
    let mut basis: Vec<WeylElement> = Vec::new();
    let mut lts: Vec<(Key, MultiPoly)> = Vec::new();
    let mut sugars: Vec<u32> = Vec::new();
    let mut pending: Vec<Pair> = Vec::new();
    let mut done: HashSet<(usize, usize)> = HashSet::new();

    for g in ideal.generators() {
        let g = normalize(g, order);
        if basis.contains(&g) {
            continue;
        }
        let sugar = element_sugar(&g, order);
        push_element(g, sugar, order, &mut basis, &mut lts, &mut sugars, &mut pending)?;
    }

    while let Some(idx) = select_pair(&pending, order) {
        let pair = pending.swap_remove(idx);
        budget.spend()?;
        // Chain criterion: a third leading monomial divides the pair lcm and
        // both side pairs are already treated.
        let chained = (0..basis.len()).any(|k| {
            k != pair.i
                && k != pair.j
                && key_divides(&lts[k].0, &pair.lcm)
                && done.contains(&ordered(pair.i, k))
                && done.contains(&ordered(pair.j, k))
        });
        if chained {
            done.insert((pair.i, pair.j));
            continue;
        }
        if key_coprime(&lts[pair.i].0, &lts[pair.j].0) {
            // With coprime leading monomials the S-pair reduces to a multiple
            // of the commutator, which the commutative product criterion
            // would wrongly discard. Reducing the commutator covers the pair
            // and captures the genuinely new element when there is one.
            let h = basis[pair.i].commutator(&basis[pair.j]);
            let (r, _) = reduce_full(&h, &basis, &lts, order, &mut budget)?;
            if !r.is_zero() {
                let sugar = sugars[pair.i] + sugars[pair.j];
                push_element(
                    normalize(&r, order),
                    sugar,
                    order,
                    &mut basis,
                    &mut lts,
                    &mut sugars,
                    &mut pending,
                )?;
            }
            done.insert((pair.i, pair.j));
            continue;
        }
        let sp = s_pair(&basis[pair.i], &lts[pair.i], &basis[pair.j], &lts[pair.j]);
        let (r, _) = reduce_full(&sp, &basis, &lts, order, &mut budget)?;
        if !r.is_zero() {
            push_element(
                normalize(&r, order),
                pair.sugar,
                order,
                &mut basis,
                &mut lts,
                &mut sugars,
                &mut pending,
            )?;
        }
        done.insert((pair.i, pair.j));
    }

    let elements = interreduce(basis, order, &mut budget)?;
    Ok(GroebnerBasis {
        elements,
        order,
        reduced: true,
    })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b { (a, b) } else { (b, a) }
}

/// Full autoreduction: every element is reduced against the others until
/// nothing changes, which makes the basis canonical for its order.
fn interreduce(
    mut elems: Vec<WeylElement>,
    order: MonomialOrder,
    budget: &mut Budget,
) -> Result<Vec<WeylElement>> {
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < elems.len() {
            let el = elems.remove(i);
            let lts: Vec<(Key, MultiPoly)> = elems.iter().map(|e| lt_of(e, order)).collect();
            let (r, _) = reduce_full(&el, &elems, &lts, order, budget)?;
            if r.is_zero() {
                changed = true;
            } else {
                let r = normalize(&r, order);
                if r != el {
                    changed = true;
                }
                elems.insert(i, r);
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    let mut keyed: Vec<(Key, WeylElement)> = elems
        .into_iter()
        .map(|e| (lt_of(&e, order).0, e))
        .collect();
    keyed.sort_by(|a, b| order.cmp(&a.0, &b.0));
    Ok(keyed.into_iter().map(|(_, e)| e).collect())
}

/// Remainder of `w` with no term divisible by a leading monomial of the
/// basis. Over Q(s) this is the normal form up to a unit; the fraction-free
/// multiplier is dropped here, so membership tests (zero remainder) and
/// unit-leading-coefficient bases are unaffected.
pub fn normal_form(w: &WeylElement, gb: &GroebnerBasis) -> Result<WeylElement> {
    let (r, _) = normal_form_scaled(w, gb)?;
    Ok(r)
}

/// Like `normal_form`, but also returns the multiplier lambda in Q[s] with
/// lambda * w congruent to the remainder modulo the ideal.
pub fn normal_form_scaled(w: &WeylElement, gb: &GroebnerBasis) -> Result<(WeylElement, MultiPoly)> {
    let Some(model) = gb.elements.first() else {
        return Ok((w.clone(), MultiPoly::one()));
    };
    let target = if w.x_names() == model.x_names() && w.s_names() == model.s_names() {
        w.clone()
    } else {
        for v in w.x_names() {
            if !model.x_names().contains(v) {
                return Err(Error::Mismatch(format!(
                    "variable {v} is not part of the basis ring"
                )));
            }
        }
        for v in w.s_names() {
            if !model.s_names().contains(v) {
                return Err(Error::Mismatch(format!(
                    "parameter {v} is not part of the basis ring"
                )));
            }
        }
        w.embed(model.x_names(), model.s_names())
    };
    let lts: Vec<(Key, MultiPoly)> = gb
        .elements
        .iter()
        .map(|e| lt_of(e, gb.order))
        .collect();
    let mut budget = Budget::new(DEFAULT_STEP_BUDGET);
    reduce_full(&target, &gb.elements, &lts, gb.order, &mut budget)
}

/// Extraction through an annihilating ideal: reduces Q*f modulo a Groebner
/// basis of I and requires the remainder to be a scalar b(s), returned monic.
pub fn nf_extract_b(
    q: &WeylElement,
    f: &MultiPoly,
    ideal: &LeftIdeal,
    order: MonomialOrder,
) -> Result<BPoly> {
    let gb = left_groebner(ideal, order)?;
    nf_extract_b_against(q, f, &gb)
}

/// Same extraction against a precomputed basis.
pub fn nf_extract_b_against(
    q: &WeylElement,
    f: &MultiPoly,
    gb: &GroebnerBasis,
) -> Result<BPoly> {
    let model = gb
        .elements
        .first()
        .ok_or_else(|| Error::Mismatch("basis has no elements".into()))?;
    let fop = WeylElement::from_poly(f, model.x_names().to_vec(), model.s_names().to_vec())?;
    let (rem, lambda) = normal_form_scaled(&q.mul(&fop), gb)?;
    let Some(scalar) = rem.as_scalar() else {
        return Err(Error::NonScalarResidue(format!(
            "normal form of Q*f keeps x or dx terms: {rem}"
        )));
    };
    if scalar.is_zero() {
        return Ok(BPoly::zero());
    }
    // Undo the fraction-free multiplier. A factor of lambda that does not
    // cancel would amount to specializing s, which is refused.
    let g = scalar.gcd(&lambda);
    let num = scalar.exact_div(&g).expect("gcd divides");
    let den = lambda.exact_div(&g).expect("gcd divides");
    let Some(c) = den.as_constant() else {
        return Err(Error::SideCondition(format!(
            "normal form of Q*f required inverting {den}"
        )));
    };
    let val = num.scale(&c.recip());
    let s_names = model.s_names();
    let b = if s_names.len() == 1 {
        BPoly::from_multipoly(&val, &s_names[0])
    } else if val.as_constant().is_some() {
        BPoly::from_multipoly(&val, "s")
    } else {
        return Err(Error::Mismatch(
            "b-function extraction needs exactly one s parameter".into(),
        ));
    };
    Ok(b.monic())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{RatFunc, Rational, rat_int};

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn op(src: &str, x: &[&str], s: &[&str]) -> WeylElement {
        WeylElement::parse(src, &names(x), &names(s)).unwrap()
    }

    fn lin(num: i64, den: i64) -> BPoly {
        BPoly::from_coeffs(vec![
            RatFunc::from_poly(MultiPoly::constant(Rational::new(num.into(), den.into()))),
            RatFunc::one(),
        ])
    }

    fn cubic_ideal() -> LeftIdeal {
        let x = ["x0", "x1", "x2", "x3"];
        let s = ["s"];
        let g11 = op("x1*dx1 + 2*x2*dx2 + 3*x3*dx3 - 6*s - 2", &x, &s);
        let g12 = op("3*x0*dx1 + 2*x1*dx2 + x2*dx3", &x, &s);
        let g21 = op("x1*dx0 + 2*x2*dx1 + 3*x3*dx2", &x, &s);
        let g22 = op("3*x0*dx0 + 2*x1*dx1 + x2*dx2 - 6*s - 1", &x, &s);
        LeftIdeal::new(vec![g11, g12.pow(2), g21, g22]).unwrap()
    }

    fn cubic_discriminant() -> MultiPoly {
        MultiPoly::parse(
            "18*x0*x1*x2*x3 - 4*x1^3*x3 + x1^2*x2^2 - 4*x0*x2^3 - 27*x0^2*x3^2",
        )
        .unwrap()
    }

    #[test]
    fn single_generator_is_its_own_basis() {
        let d = op("dx", &["x"], &[]);
        let ideal = LeftIdeal::new(vec![d.clone()]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        assert_eq!(gb.elements(), &[d]);
        assert!(gb.is_reduced());
    }

    #[test]
    fn ideal_rejects_empty_and_zero_generators() {
        assert!(LeftIdeal::new(Vec::new()).is_err());
        let zero = WeylElement::new(names(&["x"]), Vec::new());
        assert!(LeftIdeal::new(vec![zero]).is_err());
    }

    #[test]
    fn euler_pair_closure_collapses_to_the_unit_ideal() {
        // dx * (x*dx - s) - x * dx^2 = (1 - s) dx, and from there x*dx - s
        // reduces to the scalar -s, so over Q(s) the ideal is everything.
        let g1 = op("x*dx - s", &["x"], &["s"]);
        let g2 = op("dx^2", &["x"], &["s"]);
        let ideal = LeftIdeal::new(vec![g1, g2]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        for g in ideal.generators() {
            assert!(normal_form(g, &gb).unwrap().is_zero());
        }
        assert_eq!(
            gb.elements(),
            &[WeylElement::one(names(&["x"]), names(&["s"]))]
        );
    }

    #[test]
    fn coprime_leading_monomials_still_complete() {
        // The commutator of dx1 and x1*dx2 is dx2, which a commutative
        // product criterion would never see.
        let x = ["x1", "x2"];
        let ideal = LeftIdeal::new(vec![op("dx1", &x, &[]), op("x1*dx2", &x, &[])]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        assert_eq!(gb.elements().len(), 2);
        assert!(gb.elements().contains(&op("dx1", &x, &[])));
        assert!(gb.elements().contains(&op("dx2", &x, &[])));
    }

    #[test]
    fn cubic_ideal_basis_annihilates_its_generators() {
        let ideal = cubic_ideal();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        assert!(gb.is_reduced());
        for g in ideal.generators() {
            assert!(normal_form(g, &gb).unwrap().is_zero());
        }
        assert!(gb.elements().iter().all(|e| e.as_scalar().is_none()));
    }

    #[test]
    fn normal_form_matches_hand_reductions() {
        let ideal = LeftIdeal::new(vec![op("dx1", &["x1"], &[])]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        let xd = op("x1*dx1", &["x1"], &[]);
        assert!(normal_form(&xd, &gb).unwrap().is_zero());
        let dx = op("dx1*x1", &["x1"], &[]);
        assert_eq!(
            normal_form(&dx, &gb).unwrap(),
            WeylElement::one(names(&["x1"]), Vec::new())
        );
    }

    #[test]
    fn random_left_combinations_are_members() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb5a70);
        let ideal = cubic_ideal();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        for _ in 0..3 {
            let mut acc = ideal.generators()[0].zero_like();
            for g in ideal.generators() {
                let mut c = MultiPoly::constant(rat_int(rng.gen_range(-3..=3)));
                if rng.gen_bool(0.5) {
                    let slope = MultiPoly::var("s").scale(&rat_int(rng.gen_range(-2..=2)));
                    c = c.add(&slope);
                }
                if c.is_zero() {
                    c = MultiPoly::one();
                }
                let alpha: Vec<u32> = (0..4).map(|_| rng.gen_range(0..2)).collect();
                let beta: Vec<u32> = (0..4).map(|_| rng.gen_range(0..2)).collect();
                acc = acc.add(&g.mul_term_left(&alpha, &beta, &c));
            }
            assert!(normal_form(&acc, &gb).unwrap().is_zero());
        }
    }

    #[test]
    fn reduced_basis_ignores_generator_order() {
        let ideal = cubic_ideal();
        let gb1 = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        let mut permuted = ideal.generators().to_vec();
        permuted.reverse();
        permuted.swap(0, 1);
        let gb2 =
            left_groebner(&LeftIdeal::new(permuted).unwrap(), MonomialOrder::default()).unwrap();
        assert_eq!(gb1.elements(), gb2.elements());
    }

    #[test]
    fn normal_form_is_idempotent_and_linear() {
        let x = ["x1", "x2"];
        let s = ["s"];
        let ideal =
            LeftIdeal::new(vec![op("dx1", &x, &s), op("x1*dx2", &x, &s)]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::default()).unwrap();
        let w1 = op("x1^2*dx1*dx2 + s*x2", &x, &s);
        let w2 = op("dx1*x1 - s^2*x1*dx2 + 3", &x, &s);
        let n1 = normal_form(&w1, &gb).unwrap();
        let n2 = normal_form(&w2, &gb).unwrap();
        assert_eq!(normal_form(&n1, &gb).unwrap(), n1);
        let a = MultiPoly::parse("s + 2").unwrap();
        let b = MultiPoly::parse("s^2 - 1").unwrap();
        let combo = w1.scale_s(&a).add(&w2.scale_s(&b));
        assert_eq!(
            normal_form(&combo, &gb).unwrap(),
            n1.scale_s(&a).add(&n2.scale_s(&b))
        );
    }

    #[test]
    fn euler_ideal_extracts_s_plus_one() {
        let ideal = LeftIdeal::new(vec![op("x*dx - s", &["x"], &["s"])]).unwrap();
        let q = op("dx", &["x"], &["s"]);
        let f = MultiPoly::var("x");
        let b = nf_extract_b(&q, &f, &ideal, MonomialOrder::default()).unwrap();
        assert_eq!(b, lin(1, 1));
    }

    #[test]
    fn unit_inputs_extract_one() {
        let ideal = LeftIdeal::new(vec![op("x*dx - s", &["x"], &["s"])]).unwrap();
        let q = WeylElement::one(names(&["x"]), names(&["s"]));
        let b = nf_extract_b(&q, &MultiPoly::one(), &ideal, MonomialOrder::default()).unwrap();
        assert_eq!(b, BPoly::one());
    }

    #[test]
    fn cubic_route_recovers_the_binary_b_function() {
        let ideal = cubic_ideal();
        let disc = cubic_discriminant();
        let x = names(&["x0", "x1", "x2", "x3"]);
        let dual = crate::bfun::dual_invariant(&disc).unwrap();
        let q = WeylElement::dual_operator(&dual, x, names(&["s"])).unwrap();
        let b = nf_extract_b(&q, &disc, &ideal, MonomialOrder::default()).unwrap();
        let expected = lin(1, 1).mul(&lin(1, 1)).mul(&lin(3, 2)).mul(&lin(3, 2));
        assert_eq!(b, expected);
    }

    #[test]
    fn small_ideal_leaves_a_nonscalar_residue() {
        let ideal = LeftIdeal::new(vec![op("dx^2", &["x"], &["s"])]).unwrap();
        let err = nf_extract_b(
            &op("dx", &["x"], &["s"]),
            &MultiPoly::var("x"),
            &ideal,
            MonomialOrder::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonScalarResidue(_)));
    }

    #[test]
    fn nonunit_multiplier_is_a_side_condition() {
        let ideal = LeftIdeal::new(vec![op("s*x*dx - 1", &["x"], &["s"])]).unwrap();
        let err = nf_extract_b(
            &op("dx", &["x"], &["s"]),
            &MultiPoly::var("x"),
            &ideal,
            MonomialOrder::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SideCondition(_)));
    }

    #[test]
    fn degrevlex_order_also_completes() {
        let x = ["x1", "x2"];
        let ideal = LeftIdeal::new(vec![op("dx1", &x, &[]), op("x1*dx2", &x, &[])]).unwrap();
        let gb = left_groebner(&ideal, MonomialOrder::DegRevLex).unwrap();
        assert_eq!(gb.order(), MonomialOrder::DegRevLex);
        assert!(normal_form(&op("x1*dx2", &x, &[]), &gb).unwrap().is_zero());
    }

    #[test]
    fn tiny_budget_reports_a_resource_limit() {
        let ideal = cubic_ideal();
        let err = left_groebner_budgeted(&ideal, MonomialOrder::default(), 3).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
        assert_eq!(err.exit_code(), 3);
    }
}
