//! Truncated signatures of the time-augmented integrated control
//! `Û(t) = (t, ∫_0^t u(s) ds)`.
//!
//! Channel 0 is always time; inputs occupy channels `1..=m`. Signature entries
//! are stacked level by level, lexicographically within a level, which is the
//! Kronecker ordering of the iterated integrals.

mod chen;
mod compute;
mod generators;
mod oracle;
mod words;

pub use chen::chen_concatenate;
pub use compute::{compute_signature, compute_signature_with, SignatureVector};
pub use generators::{
    build_generator_matrices, nilpotent_exponential, SignatureSystem, SparseMatrix, UnitPattern,
};
pub use oracle::{quadrature_oracle_signature, ORACLE_TOLERANCE};
pub use words::{level_offset, signature_dimension, words, WordIndex};
