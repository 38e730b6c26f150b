//! Path simulation: counter-based innovation streams, deterministic atom
//! assignment, truncated moving-average filtering, and the circulant
//! companion construction used for approximation-error experiments.
//!
//! Determinism contract: output depends only on (model, p, n, q, seed),
//! never on thread count or scheduling. Each row owns an independent
//! counter-seeded stream, so rows can be generated in parallel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{InnovationLaw, ProcessModel, RotationKind, SpectralParamDistribution};

/// Hard cap on innovation entries (p * (n + reach)) per simulated path.
pub const MAX_PATH_ENTRIES: usize = 1 << 26;

/// Half-width of the standardized uniform innovation support.
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Stream id mixed into the seed for the random-rotation draw.
const ROTATION_STREAM: u64 = 0x524f_5441_5445_5f55;

/// Derives an independent substream seed from a base seed and a stream id
/// (splitmix64 finalizer over the mixed words).
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dense data of a simulated path or innovation block, real or complex.
#[derive(Clone, Debug, PartialEq)]
pub enum PathEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl PathEntries {
    pub fn p(&self) -> usize {
        match self {
            PathEntries::Real(m) => m.nrows(),
            PathEntries::Complex(m) => m.nrows(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            PathEntries::Real(m) => m.ncols(),
            PathEntries::Complex(m) => m.ncols(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, PathEntries::Complex(_))
    }
}

/// Which construction produced a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    /// Ordinary truncated moving average over a linear innovation stream.
    Lag,
    /// Same filter applied circularly over the last n innovation columns.
    Circulant,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Lag => "lag",
            PathKind::Circulant => "circulant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lag" => Some(PathKind::Lag),
            "circulant" => Some(PathKind::Circulant),
            _ => None,
        }
    }
}

/// Provenance of a simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathMeta {
    pub p: usize,
    pub n: usize,
    /// Convolution reach actually used: family truncation plus filter length
    /// minus one. The lag and circulant paths agree beyond this many leading
    /// time points.
    pub q: usize,
    pub seed: u64,
    pub model_hash: u64,
    pub kind: PathKind,
    /// Seed of the rotation draw when the model requests a random basis.
    pub rotation_seed: Option<u64>,
}

/// A simulated data matrix (p rows, n time columns) with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedPath {
    pub entries: PathEntries,
    pub meta: PathMeta,
}

fn real_row(law: InnovationLaw, seed: u64, row: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, row));
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let v = match law {
            InnovationLaw::RealGaussian => rng.sample(StandardNormal),
            InnovationLaw::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            InnovationLaw::StandardizedUniform => rng.gen_range(-SQRT3..SQRT3),
            InnovationLaw::ComplexGaussian => unreachable!("complex law in real stream"),
        };
        out.push(v);
    }
    out
}

fn complex_row(seed: u64, row: u64, len: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, row));
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.push(Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
    }
    out
}

fn check_budget(p: usize, len: usize) -> Result<()> {
    let size = (p as u128) * (len as u128);
    if size > MAX_PATH_ENTRIES as u128 {
        return Err(Error::SizeBudget {
            size: size.min(usize::MAX as u128) as usize,
            budget: MAX_PATH_ENTRIES,
        });
    }
    Ok(())
}

/// Draws the i.i.d. innovation block: p independent rows of `len` sequential
/// values each, row r seeded by `mix_seed(seed, r)`.
pub fn gen_innovations(law: InnovationLaw, seed: u64, p: usize, len: usize) -> Result<PathEntries> {
    check_budget(p, len)?;
    if law.is_complex() {
        let rows: Vec<Vec<Complex64>> = (0..p)
            .into_par_iter()
            .map(|r| complex_row(seed, r as u64, len))
            .collect();
        Ok(PathEntries::Complex(DMatrix::from_fn(p, len, |i, j| rows[i][j])))
    } else {
        let rows: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|r| real_row(law, seed, r as u64, len))
            .collect();
        Ok(PathEntries::Real(DMatrix::from_fn(p, len, |i, j| rows[i][j])))
    }
}

/// Row counts per atom by the largest-remainder rule; ties go to the lower
/// atom index. Counts sum to p exactly.
pub fn atom_counts(param_distribution: &SpectralParamDistribution, p: usize) -> Vec<usize> {
    let k = param_distribution.atoms.len();
    let mut counts = vec![0usize; k];
    let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(k);
    let mut used = 0usize;
    for (a, atom) in param_distribution.atoms.iter().enumerate() {
        let target = atom.weight * p as f64;
        let base = target.floor() as usize;
        counts[a] = base;
        used += base;
        fracs.push((target - base as f64, a));
    }
    fracs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    for &(_, a) in fracs.iter().take(p.saturating_sub(used)) {
        counts[a] += 1;
    }
    counts
}

/// Atom index for each of the p rows: contiguous blocks in atom order,
/// sized by [`atom_counts`].
pub fn assign_lambdas(param_distribution: &SpectralParamDistribution, p: usize) -> Vec<usize> {
    let mut assignment = Vec::with_capacity(p);
    for (a, count) in atom_counts(param_distribution, p).into_iter().enumerate() {
        assignment.extend(std::iter::repeat_n(a, count));
    }
    assignment
}

fn convolve_row<T>(src: &[T], taps: &[f64], n: usize, col: impl Fn(usize, usize) -> usize) -> Vec<T>
where
    T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
{
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut acc = T::default();
        for (ell, &w) in taps.iter().enumerate() {
            acc += src[col(t, ell)] * w;
        }
        out.push(acc);
    }
    out
}

fn filter_block<T>(
    rows: &[Vec<T>],
    assignment: &[usize],
    taps: &[Vec<f64>],
    n: usize,
    kind: PathKind,
    reach: usize,
) -> Vec<Vec<T>>
where
    T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T> + Send + Sync,
{
    (0..rows.len())
        .into_par_iter()
        .map(|r| {
            let w = &taps[assignment[r]];
            match kind {
                PathKind::Lag => convolve_row(&rows[r], w, n, |t, ell| t + reach - ell),
                PathKind::Circulant => convolve_row(&rows[r], w, n, |t, ell| {
                    reach + (t as i64 - ell as i64).rem_euclid(n as i64) as usize
                }),
            }
        })
        .collect()
}

fn haar_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Positive-diagonal convention makes the factor Haar distributed.
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn haar_unitary(p: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(p, p, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..p {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

fn build_path(
    model: &ProcessModel,
    p: usize,
    n: usize,
    q: usize,
    seed: u64,
    kind: PathKind,
) -> Result<SimulatedPath> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidConfig("path requires p >= 1 and n >= 1".into()));
    }
    model.validate()?;
    let taps: Vec<Vec<f64>> = (0..model.param_distribution.atoms.len())
        .map(|a| model.row_taps(a, q))
        .collect::<Result<_>>()?;
    let reach = taps[0].len() - 1;
    let n_total = n + reach;
    check_budget(p, n_total)?;
    let assignment = assign_lambdas(&model.param_distribution, p);

    let rotation_seed = match model.rotation {
        RotationKind::IdentityU => None,
        RotationKind::RandomOrthogonalU => Some(mix_seed(seed, ROTATION_STREAM)),
    };

    let entries = if model.innovation.is_complex() {
        let rows: Vec<Vec<Complex64>> = (0..p)
            .into_par_iter()
            .map(|r| complex_row(seed, r as u64, n_total))
            .collect();
        let filtered = filter_block(&rows, &assignment, &taps, n, kind, reach);
        let x = DMatrix::from_fn(p, n, |i, j| filtered[i][j]);
        match rotation_seed {
            None => PathEntries::Complex(x),
            Some(rs) => PathEntries::Complex(haar_unitary(p, rs) * x),
        }
    } else {
        let rows: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|r| real_row(model.innovation, seed, r as u64, n_total))
            .collect();
        let filtered = filter_block(&rows, &assignment, &taps, n, kind, reach);
        let x = DMatrix::from_fn(p, n, |i, j| filtered[i][j]);
        match rotation_seed {
            None => PathEntries::Real(x),
            Some(rs) => PathEntries::Real(haar_orthogonal(p, rs) * x),
        }
    };

    Ok(SimulatedPath {
        entries,
        meta: PathMeta {
            p,
            n,
            q: reach,
            seed,
            model_hash: model.hash(),
            kind,
            rotation_seed,
        },
    })
}

/// Simulates p coordinates over n time points with the family truncated at
/// lag q. Row j applies its atom's taps to a private innovation stream;
/// column t uses innovations at stream offsets t .. t+q.
pub fn simulate_path(
    model: &ProcessModel,
    p: usize,
    n: usize,
    q: usize,
    seed: u64,
) -> Result<SimulatedPath> {
    build_path(model, p, n, q, seed, PathKind::Lag)
}

/// Circulant companion of [`simulate_path`]: identical streams and taps, but
/// the filter wraps over the last n innovation columns. Columns with t > q
/// match the lag path bitwise.
pub fn simulate_circulant_path(
    model: &ProcessModel,
    p: usize,
    n: usize,
    q: usize,
    seed: u64,
) -> Result<SimulatedPath> {
    build_path(model, p, n, q, seed, PathKind::Circulant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientFamily, InnovationLaw, ProcessModel, RotationKind};

    fn ma1(lambda: f64) -> ProcessModel {
        ProcessModel::new(
            CoefficientFamily::tabulated_ma(),
            SpectralParamDistribution::point_mass(vec![lambda]),
            InnovationLaw::RealGaussian,
            RotationKind::IdentityU,
        )
        .unwrap()
    }

    #[test]
    fn rows_are_independent_streams() {
        let all = gen_innovations(InnovationLaw::RealGaussian, 7, 4, 10).unwrap();
        let PathEntries::Real(m) = all else { panic!("real law") };
        for r in 0..4 {
            let solo = real_row(InnovationLaw::RealGaussian, 7, r as u64, 10);
            for j in 0..10 {
                assert_eq!(m[(r, j)], solo[j]);
            }
        }
    }

    #[test]
    fn rademacher_values_are_signs() {
        let PathEntries::Real(m) = gen_innovations(InnovationLaw::Rademacher, 3, 8, 64).unwrap()
        else {
            panic!("real law")
        };
        assert!(m.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(m.iter().any(|&v| v == 1.0) && m.iter().any(|&v| v == -1.0));
    }

    #[test]
    fn gaussian_mean_is_small() {
        let PathEntries::Real(m) =
            gen_innovations(InnovationLaw::RealGaussian, 42, 1, 1_000_000).unwrap()
        else {
            panic!("real law")
        };
        let mean = m.iter().sum::<f64>() / 1e6;
        assert!(mean.abs() <= 4e-3, "mean {mean}");
    }

    #[test]
    fn uniform_law_is_standardized() {
        let PathEntries::Real(m) =
            gen_innovations(InnovationLaw::StandardizedUniform, 5, 1, 100_000).unwrap()
        else {
            panic!("real law")
        };
        assert!(m.iter().all(|&v| v.abs() < SQRT3 + 1e-12));
        let var = m.iter().map(|&v| v * v).sum::<f64>() / 1e5;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn complex_law_has_unit_second_moment() {
        let PathEntries::Complex(m) =
            gen_innovations(InnovationLaw::ComplexGaussian, 5, 1, 100_000).unwrap()
        else {
            panic!("complex law")
        };
        let second = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((second - 1.0).abs() < 0.05, "E|z|^2 {second}");
    }

    #[test]
    fn atom_counts_examples() {
        let half = SpectralParamDistribution::from_weighted([(vec![0.2], 0.5), (vec![0.8], 0.5)])
            .unwrap();
        assert_eq!(atom_counts(&half, 4), vec![2, 2]);
        // Equal remainders: the lower index takes the spare row.
        assert_eq!(atom_counts(&half, 5), vec![3, 2]);
        let skew = SpectralParamDistribution::from_weighted([(vec![0.2], 0.3), (vec![0.8], 0.7)])
            .unwrap();
        assert_eq!(atom_counts(&skew, 10), vec![3, 7]);
        for p in 0..40 {
            let counts = atom_counts(&skew, p);
            assert_eq!(counts.iter().sum::<usize>(), p);
        }
        assert_eq!(assign_lambdas(&half, 5), vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn ma1_path_matches_stream_by_hand() {
        let model = ma1(1.0);
        let path = simulate_path(&model, 1, 2, 1, 11).unwrap();
        let z = real_row(InnovationLaw::RealGaussian, 11, 0, 3);
        let PathEntries::Real(x) = &path.entries else { panic!("real path") };
        assert_eq!(x[(0, 0)], z[1] + z[0]);
        assert_eq!(x[(0, 1)], z[2] + z[1]);
        assert_eq!(path.meta.q, 1);
        assert_eq!(path.meta.kind, PathKind::Lag);
    }

    #[test]
    fn circulant_path_wraps_by_hand() {
        let model = ma1(1.0);
        let path = simulate_circulant_path(&model, 1, 3, 1, 11).unwrap();
        let z = real_row(InnovationLaw::RealGaussian, 11, 0, 4);
        let PathEntries::Real(x) = &path.entries else { panic!("real path") };
        assert_eq!(x[(0, 0)], z[1] + z[3]);
        assert_eq!(x[(0, 1)], z[2] + z[1]);
        assert_eq!(x[(0, 2)], z[3] + z[2]);
    }

    #[test]
    fn lag_and_circulant_agree_past_reach() {
        let param_distribution = SpectralParamDistribution::from_weighted([
            (vec![0.5, 0.2], 0.5),
            (vec![-0.3, 0.4], 0.5),
        ])
        .unwrap();
        let model = ProcessModel::new(
            CoefficientFamily::new(crate::model::FamilyKind::Arma11, 64),
            param_distribution,
            InnovationLaw::RealGaussian,
            RotationKind::IdentityU,
        )
        .unwrap();
        let q = 6;
        let lag = simulate_path(&model, 4, 32, q, 99).unwrap();
        let circ = simulate_circulant_path(&model, 4, 32, q, 99).unwrap();
        let (PathEntries::Real(a), PathEntries::Real(b)) = (&lag.entries, &circ.entries) else {
            panic!("real paths")
        };
        for t in q..32 {
            for i in 0..4 {
                assert_eq!(a[(i, t)], b[(i, t)], "row {i} col {t}");
            }
        }
        assert_ne!(a.column(0), b.column(0));
    }

    #[test]
    fn row_variance_matches_tap_energy() {
        // Long-run sample variance of one MA(1) row approximates 1 + lambda^2.
        let model = ma1(0.6);
        let path = simulate_path(&model, 1, 100_000, 1, 3).unwrap();
        let PathEntries::Real(x) = &path.entries else { panic!("real path") };
        let var = x.iter().map(|&v| v * v).sum::<f64>() / 1e5;
        let expect = 1.0 + 0.36;
        assert!((var - expect).abs() / expect < 0.05, "variance {var}");
    }

    #[test]
    fn size_budget_enforced() {
        let model = ma1(0.5);
        let err = simulate_path(&model, 1 << 14, 1 << 13, 1, 0).unwrap_err();
        assert!(matches!(err, Error::SizeBudget { .. }));
    }

    #[test]
    fn rotation_preserves_column_norms() {
        let param_distribution = SpectralParamDistribution::from_weighted([(vec![0.2], 0.5), (vec![0.8], 0.5)])
            .unwrap();
        let base = ProcessModel::new(
            CoefficientFamily::tabulated_ma(),
            param_distribution.clone(),
            InnovationLaw::RealGaussian,
            RotationKind::IdentityU,
        )
        .unwrap();
        let rotated = ProcessModel::new(
            CoefficientFamily::tabulated_ma(),
            param_distribution,
            InnovationLaw::RealGaussian,
            RotationKind::RandomOrthogonalU,
        )
        .unwrap();
        let a = simulate_path(&base, 12, 20, 4, 5).unwrap();
        let b = simulate_path(&rotated, 12, 20, 4, 5).unwrap();
        assert!(b.meta.rotation_seed.is_some());
        let (PathEntries::Real(xa), PathEntries::Real(xb)) = (&a.entries, &b.entries) else {
            panic!("real paths")
        };
        for t in 0..20 {
            let na = xa.column(t).norm();
            let nb = xb.column(t).norm();
            assert!((na - nb).abs() < 1e-9 * na.max(1.0), "col {t}: {na} vs {nb}");
        }
    }

    #[test]
    fn unitary_rotation_is_unitary() {
        let u = haar_unitary(8, 123);
        let prod = &u * u.adjoint();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn paths_are_reproducible() {
        let model = ma1(0.4);
        let a = simulate_path(&model, 6, 40, 2, 77).unwrap();
        let b = simulate_path(&model, 6, 40, 2, 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&model, 6, 40, 2, 78).unwrap();
        assert_ne!(a, c);
    }
}
