//! Direct simulation Monte Carlo for the spatially homogeneous inelastic
//! hard-sphere Boltzmann equation, with the Gaussian identities and scripted
//! studies used to check its cooling and steady-state behaviour.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dsmc;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod kernel;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
