//! Numerical laboratory for the reversible reaction-diffusion system
//! `αU + βV ⇌ γW` with mass-action kinetics and zero-flux boundaries.

// negated comparisons keep NaN on the rejecting side of every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod entropy;
pub mod error;
pub mod grid;
pub mod ineqlab;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
