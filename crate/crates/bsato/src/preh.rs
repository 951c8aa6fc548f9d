//! Concrete spaces with distinguished semi-invariants: binary forms with
//! their discriminants and root functions, pencils of symmetric 3x3
//! matrices, castling bookkeeping for factored b-functions, and the
//! series-side coefficient extraction used on the pencil quotient.

pub mod binary;
pub mod castle;
pub mod pencil;
pub mod series;

pub use binary::BinaryFormSpace;
pub use castle::CastlingContext;
pub use pencil::PencilSpace;
