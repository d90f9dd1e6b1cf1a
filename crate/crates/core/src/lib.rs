//! Splitting trees (binary homogeneous Crump-Mode-Jagers processes) with
//! Poissonian immigration.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm:
//! the Laplace exponent and Malthusian parameter of a lifespan measure, the
//! scale function and the exact transient laws it encodes, event-driven and
//! spine-decomposition simulators, the three structured immigration models,
//! samplers for the limiting abundance laws, goodness-of-fit tests and the
//! stick-breaking estimator. File formats, configuration and the command line
//! live in the `splitree` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod error;
pub mod estimate;
pub mod immigration;
pub mod limits;
pub mod model;
pub mod quad;
pub mod rng;
pub mod scale;
pub mod sim;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::{DerivedParams, GenericDensity, Lifespan, LifespanModel};
