//! Spectral solvers for generalized (space-fractional) Black-Scholes equations.
//!
//! The generator `J = -x d/dx` of the dilation group `(G(t) f)(x) = f(e^{-t} x)`
//! acts diagonally on the Mellin modes `x^{-z}`, so any holomorphic function
//! `h(J)` is a Fourier multiplier `h(delta + iu)` in the variable `y = log x`.
//! This crate discretizes that calculus on a uniform grid in `y` and builds
//! the four fractional Black-Scholes semigroups on top of it, together with
//! slow direct-quadrature oracles and numerical checks of the scalar
//! estimates the construction relies on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod direct;
pub mod error;
pub mod grid;
pub mod multiplier;
pub mod quad;
pub mod semigroup;
pub mod special;
pub mod suites;

pub use error::{Error, Result};
pub use special::ComplexScalar;
