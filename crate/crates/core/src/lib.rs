//! Quasi-Monte Carlo finite element estimation of expected linear functionals
//! of parametric linear elasticity on the unit square.

pub mod coeff;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fem;
pub mod mesh;
pub mod qmc;
pub mod sum;

pub use error::{Error, Result};
