//! Desk-scale number-theoretic toolkit around Sun's 2^k + m conjecture:
//! exact prime and prime-pair counting, singular-series averages over the
//! shifted-pair index set, Romanov-type constants with rigorous truncation
//! bounds, equidistribution checks, empirical first and second moments, and
//! the explicit constant chains that turn those into density bounds.
//!
//! Heavy loops are data-parallel via rayon (the default `parallel`
//! feature) with a sequential fallback; results are bit-identical across
//! both paths and any thread count, because work is chunked deterministically
//! and combined in chunk order.

pub mod arith;
pub mod constants;
pub mod empirics;
pub mod equidist;
mod error;
mod exec;
pub mod phi;
pub mod primality;
pub mod sieve;

pub use error::{Error, Result};
pub use exec::Execution;
