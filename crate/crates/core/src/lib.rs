//! Computational companion for Chen-prime Goldbach representations: arithmetic
//! tables, Dirichlet characters, sieve weights, Heath-Brown type models,
//! exponential sums and the additive checks built on them.

pub mod arith;
pub mod characters;
pub mod chen;
pub mod error;
pub mod fourier;
pub mod goldbach;
pub mod models;
pub mod numeric;
pub mod sieves;

pub use arith::FactorTable;
pub use error::{Error, Result};
