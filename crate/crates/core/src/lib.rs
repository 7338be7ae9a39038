//! Simulation of a Raman atom-laser outcoupler driven by squeezed light.
//!
//! The crate propagates the condensate, the outcoupled atom beam and the
//! probe light on a 1D grid, tracks how an input squeezed mode is shared
//! between the atoms and the transmitted light, and evaluates quadrature
//! variances and EPR inferred variances of the outputs.

pub mod check;
pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod output;
pub mod propagator;
pub mod stats;
pub mod svg;
pub mod units;

pub use error::{Error, Result};
