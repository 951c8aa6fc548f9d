//! Exact symbolic machinery for b-functions of semi-invariants and related
//! representation-theoretic bookkeeping.
//!
//! The crate is organized bottom-up:
//!
//! * [`exact`]: arbitrary-precision rationals, sparse multivariate polynomials,
//!   rational functions, subresultants, and a parametric linear solver.
//! * [`weyl`]: the Weyl algebra D_n extended by central parameters s_1..s_l.
//! * [`nilsson`]: carriers for symbolic objects f^(s+c) (x) u with u in an
//!   algebraic extension or a rank-r ODE solution space.
//! * [`bfun`]: b-function extraction (multiplicity-free division, ansatz
//!   solving, lcm/shift/symmetry utilities) and the factored representation.
//! * [`groebner`]: left Groebner bases in D_n[s] and normal-form extraction.
//! * [`invariants`]: pushing constant-coefficient operators down quotient maps
//!   built from algebraically independent invariants.
//! * [`preh`]: concrete spaces (binary forms, pencils of symmetric matrices)
//!   with their discriminants, annihilators, and castling bookkeeping.
//! * [`repmult`]: Gaussian binomials and plethysm multiplicities for SL_2.
//! * [`cli`]: job plumbing shared by the `bsato` binary.

pub mod bfun;
pub mod cli;
pub mod error;
pub mod exact;
pub mod groebner;
pub mod invariants;
pub mod nilsson;
pub mod preh;
pub mod repmult;
pub mod weyl;

pub use error::Error;
