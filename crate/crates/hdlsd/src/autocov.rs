//! Symmetrized lag autocovariance matrices and tapered spectral-density
//! estimators of simulated paths.
//!
//! Both estimators are built from Hermitian pairs (M + M^H), so the outputs
//! are exactly Hermitian in floating point, not just up to rounding.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::TaperSpec;
use crate::simulate::{PathEntries, SimulatedPath};

/// A Hermitian estimator matrix, kept real when the data are real.
#[derive(Clone, Debug, PartialEq)]
pub enum HermMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl HermMatrix {
    pub fn p(&self) -> usize {
        match self {
            HermMatrix::Real(m) => m.nrows(),
            HermMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, HermMatrix::Complex(_))
    }
}

/// Symmetrized lag-tau sample autocovariance:
/// C_tau = (2n)^{-1} sum_{t=1..n-tau} (X_t X_{t+tau}^* + X_{t+tau} X_t^*).
///
/// At tau = 0 this is the sample covariance n^{-1} sum_t X_t X_t^*.
pub fn sym_autocov(path: &SimulatedPath, tau: usize) -> Result<HermMatrix> {
    let n = path.entries.n();
    if tau >= n {
        return Err(Error::LagOutOfRange { tau, n });
    }
    let width = n - tau;
    let scale = 1.0 / (2.0 * n as f64);
    match &path.entries {
        PathEntries::Real(x) => {
            let a = x.columns(0, width);
            let b = x.columns(tau, width);
            let prod = a * b.transpose();
            let sym = (&prod + prod.transpose()) * scale;
            Ok(HermMatrix::Real(sym))
        }
        PathEntries::Complex(x) => {
            let a = x.columns(0, width);
            let b = x.columns(tau, width);
            let prod = a * b.adjoint();
            let sym = (&prod + prod.adjoint()) * Complex64::new(scale, 0.0);
            Ok(HermMatrix::Complex(sym))
        }
    }
}

/// Tapered spectral-density estimator at frequency eta:
/// sum over lags tau of T(tau) e^{i tau eta} n^{-1} sum_t X_t X_{t+tau}^*,
/// with the negative lags supplied by Hermitian symmetry.
///
/// Lags at or beyond the path length contribute nothing. A taper with no
/// active lag >= 1 returns exactly `sym_autocov(path, 0)`, including its
/// real storage for real data.
pub fn tapered_spectral(path: &SimulatedPath, taper: &TaperSpec, eta: f64) -> Result<HermMatrix> {
    taper.validate()?;
    let n = path.entries.n();
    let active: Vec<usize> = (1..taper.horizon.min(n))
        .filter(|&tau| taper.weight(tau) != 0.0)
        .collect();
    if active.is_empty() {
        return sym_autocov(path, 0);
    }
    let inv_n = 1.0 / n as f64;
    match &path.entries {
        PathEntries::Real(x) => {
            let prod0 = x * x.transpose();
            let base = (&prod0 + prod0.transpose()) * (0.5 * inv_n);
            let mut acc = base.map(|v| Complex64::new(v, 0.0));
            for tau in active {
                let a = x.columns(0, n - tau);
                let b = x.columns(tau, n - tau);
                let prod = (a * b.transpose()).map(|v| Complex64::new(v, 0.0));
                accumulate_pair(&mut acc, &prod, taper.weight(tau), tau as f64 * eta, inv_n);
            }
            Ok(HermMatrix::Complex(acc))
        }
        PathEntries::Complex(x) => {
            let prod0 = x * x.adjoint();
            let mut acc = (&prod0 + prod0.adjoint()) * Complex64::new(0.5 * inv_n, 0.0);
            for tau in active {
                let a = x.columns(0, n - tau);
                let b = x.columns(tau, n - tau);
                let prod = a * b.adjoint();
                accumulate_pair(&mut acc, &prod, taper.weight(tau), tau as f64 * eta, inv_n);
            }
            Ok(HermMatrix::Complex(acc))
        }
    }
}

/// Adds w/n * (e^{i angle} P + e^{-i angle} P^H) to the accumulator.
fn accumulate_pair(
    acc: &mut DMatrix<Complex64>,
    prod: &DMatrix<Complex64>,
    w: f64,
    angle: f64,
    inv_n: f64,
) {
    let phase = Complex64::new(angle.cos(), angle.sin()) * (w * inv_n);
    let term = prod * phase;
    *acc += &term + term.adjoint();
}

/// Spot check used in tests and diagnostics: max |M - M^H| entry.
pub fn hermitian_defect(m: &HermMatrix) -> f64 {
    match m {
        HermMatrix::Real(a) => {
            let mut worst = 0.0f64;
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
                }
            }
            worst
        }
        HermMatrix::Complex(a) => {
            let mut worst = 0.0f64;
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
                }
            }
            worst
        }
    }
}
