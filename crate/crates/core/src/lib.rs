//! Growth-and-reset master equation model of income distributions.
//!
//! The layers cross-check each other: closed-form stationary densities
//! ([`analytic`]), time integrators of the discrete and continuous master
//! equations ([`dynamics`]), an exact stochastic agent simulator and synthetic
//! panel generator ([`montecarlo`]), panel-data estimators of the growth and
//! reset kernels ([`estimation`]), and parameter fits with scaling-collapse
//! diagnostics ([`fitting`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod fitting;
pub mod grid;
pub mod kernels;
pub mod montecarlo;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
