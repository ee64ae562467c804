//! Normalized bound states of the fractional Schrodinger equation
//! `(-Delta)^s u = lambda u + a(x)|u|^{p-2}u`, `||u||_2 = c`, on periodic
//! pseudospectral grids in one and two dimensions.

// `!(x > 0.0)` is used throughout to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundstate;
pub mod config;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod params;
pub mod pipeline;
pub mod potential;
pub mod report;
pub mod spectral;
pub mod svg;
pub mod verification;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use params::PhysParams;
pub use potential::Potential;
