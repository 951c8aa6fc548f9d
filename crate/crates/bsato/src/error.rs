//! Error type shared across the crate.
//!
//! Mathematical failure modes (a division that is not proportional, a residue
//! that is not scalar, a verification margin that misses) are ordinary values
//! here, not panics; the binary maps them to exit code 1.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input text did not parse; carries position and message.
    Parse(String),
    /// Operands live over incompatible variable sets or dimensions.
    Mismatch(String),
    /// Division in a Nilsson carrier did not yield a scalar in Q[s].
    NotProportional(String),
    /// A b-polynomial did not split into linear factors with natural gamma.
    NonLinearFactor(String),
    /// Ansatz search exhausted the given order and degree bounds.
    NoSolutionWithinBounds { order_bound: u32, s_degree_bound: u32 },
    /// Normal form against a Groebner basis was not a scalar in Q[s].
    NonScalarResidue(String),
    /// Reduction needed to invert a nonconstant polynomial in s.
    SideCondition(String),
    /// A polynomial is not in the subring generated by the invariants.
    NotInSubring(String),
    /// A constructed operator failed its verification margin.
    VerificationFailure(String),
    /// Operators expected to commute do not.
    NonCommuting(String),
    /// Factored b-function division left a remainder.
    NotDivisible(String),
    /// A parametric linear system has no solution.
    Inconsistent(String),
    /// An element that must be invertible is not.
    NotInvertible(String),
    /// A configured operation budget was exhausted.
    ResourceLimit(String),
    /// A series extraction found no term at the targeted exponent.
    TargetMonomialAbsent(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::Mismatch(m) => write!(f, "mismatch: {m}"),
            Error::NotProportional(m) => write!(f, "NotProportional: {m}"),
            Error::NonLinearFactor(m) => write!(f, "NonLinearFactor: {m}"),
            Error::NoSolutionWithinBounds { order_bound, s_degree_bound } => write!(
                f,
                "NoSolutionWithinBounds: no operator up to order {order_bound} with b-degree up to {s_degree_bound}"
            ),
            Error::NonScalarResidue(m) => write!(f, "NonScalarResidue: {m}"),
            Error::SideCondition(m) => write!(f, "side condition violated: {m}"),
            Error::NotInSubring(m) => write!(f, "NotInSubring: {m}"),
            Error::VerificationFailure(m) => write!(f, "VerificationFailure: {m}"),
            Error::NonCommuting(m) => write!(f, "NonCommuting: {m}"),
            Error::NotDivisible(m) => write!(f, "NotDivisible: {m}"),
            Error::Inconsistent(m) => write!(f, "inconsistent system: {m}"),
            Error::NotInvertible(m) => write!(f, "not invertible: {m}"),
            Error::ResourceLimit(m) => write!(f, "resource limit: {m}"),
            Error::TargetMonomialAbsent(m) => write!(f, "TargetMonomialAbsent: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI assigns to this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Mismatch(_) => 2,
            Error::ResourceLimit(_) => 3,
            _ => 1,
        }
    }
}
