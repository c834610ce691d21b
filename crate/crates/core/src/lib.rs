//! Relativistic tunneling-time distributions for a Dirac particle crossing a
//! rectangular barrier.
//!
//! The crate computes the exact detector flux by momentum quadrature, its
//! time-dependent steepest-descent approximation, the frozen Gaussian model
//! around the most probable time, and earliest-of-N ("first click")
//! statistics built on top of any of those distributions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod config;
pub mod dd;
pub mod error;
pub mod firstclick;
pub mod grid;
pub mod io;
pub mod propagator;
pub mod run;
pub mod saddle;
pub mod units;

pub use error::{Error, Result};
