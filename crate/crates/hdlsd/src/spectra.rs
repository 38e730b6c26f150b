//! Empirical spectral distributions: eigenvalue extraction from Hermitian
//! estimator matrices, step CDFs, the empirical Stieltjes transform, and a
//! two-sided Kolmogorov-Smirnov distance between arbitrary CDF-like objects.

use num_complex::Complex64;

use crate::autocov::{hermitian_defect, HermMatrix};
use crate::error::{Error, Result};

/// Largest matrix dimension accepted by [`eigenvalues`].
pub const EIGEN_DIM_CAP: usize = 4096;

/// Relative tolerance for the Hermitian input check.
pub const HERMITIAN_REL_TOL: f64 = 1e-10;

/// An empirical spectral distribution: sorted real eigenvalues, each with
/// mass 1/p.
#[derive(Clone, Debug, PartialEq)]
pub struct Esd {
    values: Vec<f64>,
}

impl Esd {
    /// Wraps a sample of real points, sorting them ascending.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("spectrum contains non-finite values".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn max_abs_entry(h: &HermMatrix) -> f64 {
    match h {
        HermMatrix::Real(m) => m.iter().fold(0.0f64, |a, &v| a.max(v.abs())),
        HermMatrix::Complex(m) => m.iter().fold(0.0f64, |a, v| a.max(v.norm())),
    }
}

pub(crate) fn eigenvalues_capped(h: &HermMatrix, cap: usize) -> Result<Esd> {
    let p = h.p();
    if p > cap {
        return Err(Error::DimensionCap { p, cap });
    }
    let scale = max_abs_entry(h);
    let tolerance = HERMITIAN_REL_TOL * scale.max(1.0);
    let deviation = hermitian_defect(h);
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }
    // Implicit symmetric QL; the iteration budget is far above the handful
    // of sweeps per eigenvalue the algorithm needs.
    let max_niter = 100 * p.max(8);
    let eps = f64::EPSILON;
    let values: Vec<f64> = match h {
        HermMatrix::Real(m) => {
            let eig = nalgebra::SymmetricEigen::try_new(m.clone(), eps, max_niter)
                .ok_or(Error::EigenFailed)?;
            eig.eigenvalues.iter().copied().collect()
        }
        HermMatrix::Complex(m) => {
            let eig = nalgebra::SymmetricEigen::try_new(m.clone(), eps, max_niter)
                .ok_or(Error::EigenFailed)?;
            eig.eigenvalues.iter().copied().collect()
        }
    };
    Esd::from_values(values)
}

/// Real spectrum of a Hermitian matrix, sorted ascending.
///
/// Rejects inputs whose Hermitian defect exceeds a small relative tolerance
/// and dimensions above [`EIGEN_DIM_CAP`].
pub fn eigenvalues(h: &HermMatrix) -> Result<Esd> {
    eigenvalues_capped(h, EIGEN_DIM_CAP)
}

/// Right-continuous empirical CDF of the ESD at x.
pub fn esd_cdf(esd: &Esd, x: f64) -> f64 {
    esd.cdf(x)
}

/// Empirical Stieltjes transform s(z) = p^{-1} sum_j (sigma_j - z)^{-1},
/// defined for Im z > 0.
pub fn empirical_stieltjes(esd: &Esd, z: Complex64) -> Result<Complex64> {
    if z.im.is_nan() || z.im <= 0.0 {
        return Err(Error::UpperHalfPlane { re: z.re, im: z.im });
    }
    let p = esd.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &sigma in esd.values() {
        acc += (Complex64::new(sigma, 0.0) - z).inv();
    }
    Ok(acc / p)
}

/// Anything with a right-continuous CDF, its left limits, and a set of
/// points where it can jump or kink.
pub trait CdfLike {
    /// Right-continuous CDF value at x.
    fn cdf(&self, x: f64) -> f64;
    /// Left limit of the CDF at x.
    fn cdf_left(&self, x: f64) -> f64;
    /// Candidate extremum locations (jump points or grid knots).
    fn steps(&self) -> Vec<f64>;
}

impl CdfLike for Esd {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= x);
        k as f64 / self.values.len() as f64
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v < x);
        k as f64 / self.values.len() as f64
    }

    fn steps(&self) -> Vec<f64> {
        let mut s = self.values.clone();
        s.dedup();
        s
    }
}

/// Two-sided Kolmogorov-Smirnov distance: the sup of |F - G| over both
/// one-sided limits at every step of either argument plus the extra grid.
pub fn ks_distance(f: &dyn CdfLike, g: &dyn CdfLike, extra_grid: &[f64]) -> Result<f64> {
    let mut points = f.steps();
    points.extend(g.steps());
    points.extend(extra_grid.iter().copied().filter(|v| v.is_finite()));
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let mut worst = 0.0f64;
    for &x in &points {
        worst = worst.max((f.cdf(x) - g.cdf(x)).abs());
        worst = worst.max((f.cdf_left(x) - g.cdf_left(x)).abs());
    }
    Ok(worst)
}
