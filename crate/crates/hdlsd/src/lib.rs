//! Numerical toolkit for spectral analysis of high-dimensional linear time
//! series: path simulation, symmetrized lag autocovariance and tapered
//! spectral estimators, their empirical spectral distributions, and
//! fixed-point solvers for the limiting spectral distributions.

pub mod autocov;
pub mod error;
pub mod inversion;
pub mod io;
pub mod lsd_solver;
pub mod model;
pub mod simulate;
pub mod spectra;

pub use error::{Error, Result};
