//! Exact arithmetic layer: rationals, sparse polynomials, rational functions,
//! resultants, and parametric linear solving.
//!
//! Everything downstream (Weyl algebra, Groebner bases, carriers) is built on
//! these types; nothing in the crate ever rounds.

mod linsolve;
mod multipoly;
mod parse;
mod ratfunc;
mod rational;
mod resultant;

pub use linsolve::{
    LinearOutcome, LinearSolution, SideCondition, solve_linear_param, solve_linear_rational,
};
pub use multipoly::{MultiPoly, cmp_grevlex, exponents_of_degree};
pub(crate) use parse::{Token, tokenize as tokens};
pub use ratfunc::RatFunc;
pub use rational::{
    Rational, binomial, falling, format_rational, parse_rational, rat, rat_int, rational_gcd,
};
pub use resultant::{discriminant, resultant};
