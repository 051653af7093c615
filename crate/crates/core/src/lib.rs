//! Degree theory for set-valued perturbations of Fredholm operators, realized on a
//! finite-difference discretization of the Neumann problem
//!
//! ```text
//! u'' + u' - lambda u + eps Phi(u) ∋ 0,   u'(0) = u'(1) = 0,   ||u||_1 = 1,
//! ```
//!
//! together with tools to trace the persistence sets of eigenvalues and
//! eigenfunctions near the trivial solutions `u = ±1` and detect bifurcation.

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod continuation;
pub mod degree;
pub mod error;
pub mod linalg;
pub mod profile;
pub mod setvalued;
pub mod solver;

pub use error::{Error, Result};
