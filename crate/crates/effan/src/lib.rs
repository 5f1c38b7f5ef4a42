//! Exact computable analysis over effective Banach spaces.
//!
//! Everything here runs on exact rational arithmetic. A computable real is a
//! total stream `n -> Rational` whose `n`-th value is within `2^-n` of the
//! value it denotes; a computable point of a space is the same thing with
//! finite basis combinations in place of rationals. Operators carry a rational
//! bound certificate and act by transporting these moduli. A small register
//! machine supplies the partial computable functions behind the numberings
//! and the counterexample gallery, and a subdivision root finder certifies
//! the effective fundamental theorem of algebra.

pub mod creal;
pub mod demos;
pub mod encoding;
pub mod expr;
pub mod machine;
pub mod numberings;
pub mod operators;
pub mod rat;
pub mod roots;
pub mod spaces;

pub(crate) mod exec;

pub use creal::{CComplex, CReal, CSeq, Comparison, QueryError};
pub use rat::{GaussianRational, Rational, ScalarError};
