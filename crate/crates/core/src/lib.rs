//! Segre classes of monomial schemes.
//!
//! Two independent routes compute the Segre class of a scheme cut out by
//! monomials in simple-normal-crossing divisors `X_1, ..., X_n`:
//!
//! * [`segre::segre_integral`] integrates `n! X_1...X_n / (1 + a.X)^{n+1}`
//!   over the Newton region, cell by cell over a placing triangulation.
//! * [`segre::segre_tower`] principalizes the ideal by codimension-2 monomial
//!   blow-ups, takes `D / (1 + D)` for the resulting divisor and pushes the
//!   class back down through the tower.
//!
//! All arithmetic is exact.

pub mod chow;
pub mod cli;
mod error;
pub mod lattice;
pub mod polytope;
pub mod principalize;
pub mod segre;
pub mod series;

pub use error::{Error, Result};
