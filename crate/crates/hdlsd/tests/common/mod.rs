//! Closed-form references shared by the integration suites. Everything
//! here is computed from textbook formulas, independent of the library's
//! own solver and inversion paths.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Lower edge (1 - sqrt(c))^2 of the square-type limit law.
pub fn mp_lower_edge(c: f64) -> f64 {
    (1.0 - c.sqrt()).powi(2)
}

/// Upper edge (1 + sqrt(c))^2 of the square-type limit law.
pub fn mp_upper_edge(c: f64) -> f64 {
    (1.0 + c.sqrt()).powi(2)
}

/// Stieltjes transform of the white-noise covariance limit: the root of
/// c z s^2 + (z + c - 1) s + 1 = 0 with positive imaginary part.
pub fn mp_stieltjes(z: Complex64, c: f64) -> Complex64 {
    let a = z * c;
    let b = z + Complex64::new(c - 1.0, 0.0);
    let disc = (b * b - a * 4.0).sqrt();
    let r1 = (-b + disc) / (a * 2.0);
    let r2 = (-b - disc) / (a * 2.0);
    if r1.im > 0.0 {
        r1
    } else {
        r2
    }
}

/// Closed-form density of the white-noise covariance limit (c <= 1):
/// sqrt((b - x)(x - a)) / (2 pi c x) on (a, b).
pub fn mp_density(x: f64, c: f64) -> f64 {
    let a = mp_lower_edge(c);
    let b = mp_upper_edge(c);
    if x <= a || x >= b {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * c * x)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + j as f64 * h);
    }
    acc * h / 3.0
}

/// CDF of the white-noise covariance limit (c <= 1) by integrating the
/// closed-form density under x = a + (b - a) sin^2(theta), which removes
/// both square-root edge singularities.
pub fn mp_cdf(x: f64, c: f64) -> f64 {
    let a = mp_lower_edge(c);
    let b = mp_upper_edge(c);
    if x <= a {
        return 0.0;
    }
    if x >= b {
        return 1.0;
    }
    let theta_end = ((x - a) / (b - a)).sqrt().min(1.0).asin();
    let w = b - a;
    simpson(
        |t| {
            let xt = a + w * t.sin().powi(2);
            w * w * (2.0 * t).sin().powi(2) / (4.0 * PI * c * xt)
        },
        0.0,
        theta_end,
        2000,
    )
}
