//! Eigenvalue-sum Hessian operators, Garding cone calculus and a continuation
//! Newton solver for the Neumann problem `S_k(W(D^2 u)) = f`,
//! `u_nu = -a u + b`.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod expr;
pub mod geometry;
pub mod cones;
pub mod symfun;
pub mod verify;
pub mod solver;
pub mod woperator;

pub use error::{Error, Result};
