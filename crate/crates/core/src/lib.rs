//! Krein spectral shift function for one-dimensional Schrödinger operators
//! and Jacobi matrices, with the trace formulas built on it.

pub mod error;
pub mod cli;
pub mod experiments;
pub mod jacobi;
pub mod numerics;
pub mod periodic;
pub mod scattering;
pub mod schrodinger;
pub mod trace;
pub mod xi;

pub use error::{Error, Result};
