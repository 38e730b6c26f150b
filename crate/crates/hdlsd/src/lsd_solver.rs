//! Fixed-point solver for the Stieltjes kernel of limiting spectral
//! distributions of symmetrized lag autocovariance matrices and tapered
//! spectral estimators, plus their limiting Stieltjes transforms and the
//! finite-sample deterministic equivalent.
//!
//! The unknown is a kernel K(z, nu) on a frequency grid. Writing
//! U_a = (1/N) sum_k gamma(nu_k) h_a(nu_k) / (1 + c gamma(nu_k) K(nu_k))
//! for each atom a of the parameter distribution, the fixed point is
//! K(nu_j) = sum_a w_a h_a(nu_j) / (U_a - z), and the transform is
//! s(z) = sum_a w_a / (U_a - z). The weight factor gamma is cos(tau * nu)
//! for the lag-tau matrix and the taper symbol at (eta - nu) for the
//! tapered estimator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{taper_symbol, Fnv, ProcessModel, TaperSpec};

/// Tuning knobs of the fixed-point solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Number of frequency quadrature points (midpoint rule on [0, 2pi)).
    pub nu_grid_size: usize,
    /// Sup-norm residual required of a converged kernel.
    pub tol: f64,
    /// Iteration budget per continuation step.
    pub max_iter: usize,
    /// Damping d in K <- (1-d) K + d Phi(K); 1 means undamped.
    pub damping: f64,
    /// Geometric factor for lowering Im z during continuation.
    pub continuation_factor: f64,
    /// Multiplier on the provable-contraction starting height.
    pub v_start_multiplier: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu_grid_size: 512,
            tol: 1e-10,
            max_iter: 5000,
            damping: 0.5,
            continuation_factor: 0.7,
            v_start_multiplier: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu_grid_size < 8 || !self.nu_grid_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "nu_grid_size must be even and >= 8, got {}",
                self.nu_grid_size
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must be in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.continuation_factor > 0.0 && self.continuation_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "continuation_factor must be in (0, 1), got {}",
                self.continuation_factor
            )));
        }
        if self.v_start_multiplier.is_nan() || self.v_start_multiplier < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "v_start_multiplier must be >= 1, got {}",
                self.v_start_multiplier
            )));
        }
        Ok(())
    }
}

/// Solved kernel over the frequency grid at one spectral argument z.
#[derive(Clone, Debug)]
pub struct StieltjesKernelGrid {
    pub z: Complex64,
    /// Frequency grid points in [0, 2pi).
    pub nu: Vec<f64>,
    /// Kernel values K(z, nu_k).
    pub values: Vec<Complex64>,
    /// Per-frequency total mass m_nu of the kernel's representing measure.
    pub mass: Vec<f64>,
    pub converged: bool,
    /// Total fixed-point iterations across all continuation steps.
    pub iterations: usize,
    /// Final sup-norm residual |Phi(K) - K|.
    pub residual: f64,
    /// Whether any iterate needed its imaginary part clipped below -tol.
    pub im_clipped: bool,
    system_hash: u64,
}

/// Starting kernel for a single-height solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelStart {
    /// K = i m_nu / Im z, the large-height asymptote.
    Asymptotic,
    /// K = 0 everywhere.
    Zero,
}

/// Uniform midpoint grid of n frequencies on [0, 2pi).
fn midpoint_grid(n: usize) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|k| (k as f64 + 0.5) * step).collect()
}

/// Fourier frequencies 2 pi t / n for t = 1..=n.
fn fourier_grid(n: usize) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (1..=n).map(|t| t as f64 * step).collect()
}

/// Frequency weight factor of the estimator whose limit is being solved.
enum GammaSpec<'a> {
    Lag(usize),
    Taper(&'a TaperSpec, f64),
}

impl GammaSpec<'_> {
    fn value(&self, nu: f64) -> f64 {
        match self {
            GammaSpec::Lag(tau) => (*tau as f64 * nu).cos(),
            GammaSpec::Taper(taper, eta) => taper_symbol(taper, eta - nu),
        }
    }

    fn hash_into(&self, h: &mut Fnv) {
        match self {
            GammaSpec::Lag(tau) => {
                h.byte(0);
                h.u64(*tau as u64);
            }
            GammaSpec::Taper(taper, eta) => {
                h.byte(1);
                h.u64(taper.horizon as u64);
                for tau in 1..taper.horizon {
                    h.u64(taper.weight(tau).to_bits());
                }
                h.u64(eta.to_bits());
            }
        }
    }
}

/// Discretized fixed-point system: atoms tabulated over a frequency grid.
struct KernelSystem {
    weights: Vec<f64>,
    /// h[a][k] = effective power transfer of atom a at nu_k.
    h: Vec<Vec<f64>>,
    gamma: Vec<f64>,
    nu: Vec<f64>,
    mass: Vec<f64>,
    c: f64,
    hash: u64,
}

impl KernelSystem {
    fn new(
        model: &ProcessModel,
        c: f64,
        gamma_spec: &GammaSpec<'_>,
        nu: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if c.is_nan() || c <= 0.0 {
            return Err(Error::BadAspectRatio { c });
        }
        model.validate()?;
        let n_atoms = model.param_distribution.atoms.len();
        let mut h = Vec::with_capacity(n_atoms);
        for a in 0..n_atoms {
            let row: Vec<f64> = nu
                .iter()
                .map(|&x| model.effective_h_at(a, x))
                .collect::<Result<_>>()?;
            h.push(row);
        }
        let gamma: Vec<f64> = nu.iter().map(|&x| gamma_spec.value(x)).collect();
        let mass: Vec<f64> = (0..nu.len())
            .map(|k| (0..n_atoms).map(|a| weights[a] * h[a][k]).sum())
            .collect();
        let mut hasher = Fnv::new();
        hasher.u64(model.hash());
        hasher.u64(c.to_bits());
        gamma_spec.hash_into(&mut hasher);
        hasher.u64(nu.len() as u64);
        for &w in &weights {
            hasher.u64(w.to_bits());
        }
        Ok(Self {
            weights,
            h,
            gamma,
            nu,
            mass,
            c,
            hash: hasher.finish(),
        })
    }

    fn from_model(model: &ProcessModel, c: f64, gamma_spec: &GammaSpec<'_>, n_grid: usize) -> Result<Self> {
        let weights = model.param_distribution.atoms.iter().map(|a| a.weight).collect();
        Self::new(model, c, gamma_spec, midpoint_grid(n_grid), weights)
    }

    /// Per-atom averages U_a = (1/N) sum_k gamma_k h_a(nu_k) / (1 + c gamma_k K_k).
    fn u_values(&self, k: &[Complex64]) -> Vec<Complex64> {
        let n_inv = 1.0 / self.nu.len() as f64;
        self.h
            .iter()
            .map(|ha| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, (&g, &kv)) in self.gamma.iter().zip(k).enumerate() {
                    let hv = ha[idx];
                    // Zero transfer contributes nothing; skipping keeps the
                    // degenerate zero-mass branch exact.
                    if hv == 0.0 || g == 0.0 {
                        continue;
                    }
                    let mut den = Complex64::new(1.0, 0.0) + kv * (self.c * g);
                    if den.norm_sqr() < 1e-300 {
                        den = Complex64::new(0.0, 1e-150);
                    }
                    acc += Complex64::new(g * hv, 0.0) / den;
                }
                acc * n_inv
            })
            .collect()
    }

    /// One application of the fixed-point map.
    fn phi(&self, k: &[Complex64], z: Complex64) -> Vec<Complex64> {
        let u = self.u_values(k);
        let inv: Vec<Complex64> = u
            .iter()
            .zip(&self.weights)
            .map(|(&ua, &w)| Complex64::new(w, 0.0) / (ua - z))
            .collect();
        (0..self.nu.len())
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, iv) in inv.iter().enumerate() {
                    let hv = self.h[a][j];
                    if hv != 0.0 {
                        acc += iv * hv;
                    }
                }
                acc
            })
            .collect()
    }

    /// Limiting Stieltjes transform given a kernel on this system's grid.
    fn stieltjes(&self, k: &[Complex64], z: Complex64) -> Complex64 {
        let u = self.u_values(k);
        u.iter()
            .zip(&self.weights)
            .map(|(&ua, &w)| Complex64::new(w, 0.0) / (ua - z))
            .sum()
    }

    fn asymptotic_start(&self, v: f64) -> Vec<Complex64> {
        self.mass.iter().map(|&m| Complex64::new(0.0, m / v)).collect()
    }

    fn gamma_max(&self) -> f64 {
        self.gamma.iter().fold(0.0f64, |a, &g| a.max(g.abs()))
    }
}

struct HeightResult {
    values: Vec<Complex64>,
    iterations: usize,
    residual: f64,
    converged: bool,
    clipped: bool,
}

/// Damped fixed-point iteration at a single z, from a given start.
fn iterate_height(
    system: &KernelSystem,
    z: Complex64,
    start: Vec<Complex64>,
    cfg: &SolverConfig,
) -> HeightResult {
    let mut k = start;
    let mut clipped = false;
    let mut residual = f64::INFINITY;
    for iter in 0..cfg.max_iter {
        let phi = system.phi(&k, z);
        residual = phi
            .iter()
            .zip(&k)
            .fold(0.0f64, |a, (&p, &kv)| a.max((p - kv).norm()));
        if residual <= cfg.tol {
            return HeightResult {
                values: k,
                iterations: iter,
                residual,
                converged: true,
                clipped,
            };
        }
        let d = cfg.damping;
        for (kv, &p) in k.iter_mut().zip(&phi) {
            let mut next = *kv * (1.0 - d) + p * d;
            if next.im < 0.0 {
                if next.im < -cfg.tol {
                    clipped = true;
                }
                next.im = 0.0;
            }
            *kv = next;
        }
    }
    HeightResult {
        values: k,
        iterations: cfg.max_iter,
        residual,
        converged: false,
        clipped,
    }
}

/// Starting height of the provable-contraction region:
/// 4 * (effective transfer bound) * gamma_bound * max(c^{3/4}, c^{1/2}).
pub fn uniqueness_height(model: &ProcessModel, c: f64, gamma_bound: f64) -> f64 {
    let cpow = c.powf(0.75).max(c.sqrt());
    4.0 * model.effective_h_bound() * gamma_bound * cpow
}

/// Descending height schedule from v0 down through every target height
/// (targets strictly descending). Marks which entries are targets.
fn height_schedule(v0: f64, targets: &[f64], factor: f64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    let first = targets[0];
    let mut v = v0.max(first);
    out.push((v, v == first));
    let mut idx = if v == first { 1 } else { 0 };
    while idx < targets.len() {
        let t = targets[idx];
        v = (v * factor).max(t);
        let is_target = v == t;
        out.push((v, is_target));
        if is_target {
            idx += 1;
        }
    }
    out
}

struct ChainRun {
    /// Kernel snapshot and residual at each target height, in descending order.
    snapshots: Vec<(f64, Vec<Complex64>, f64)>,
    total_iterations: usize,
    clipped: bool,
}

/// Continuation: solve at x + i v along a descending v schedule, warm
/// starting each height from the previous solution.
fn run_chain(system: &KernelSystem, x: f64, targets: &[f64], cfg: &SolverConfig) -> Result<ChainRun> {
    let v0 = cfg.v_start_multiplier * uniqueness_height_for(system);
    let schedule = height_schedule(v0, targets, cfg.continuation_factor);
    let mut k = system.asymptotic_start(schedule[0].0);
    let mut total_iterations = 0;
    let mut clipped = false;
    let mut snapshots = Vec::new();
    for &(v, is_target) in &schedule {
        let z = Complex64::new(x, v);
        let res = iterate_height(system, z, k, cfg);
        total_iterations += res.iterations;
        clipped |= res.clipped;
        if !res.converged {
            return Err(Error::SolverDiverged {
                z,
                v_step: v,
                residual: res.residual,
                iterations: res.iterations,
            });
        }
        if is_target {
            snapshots.push((v, res.values.clone(), res.residual));
        }
        k = res.values;
    }
    Ok(ChainRun {
        snapshots,
        total_iterations,
        clipped,
    })
}

/// Contraction starting height computed from the system's own tabulated
/// transfer values and weight factors.
fn uniqueness_height_for(system: &KernelSystem) -> f64 {
    let h_sup = system
        .h
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |a, &v| a.max(v));
    let cpow = system.c.powf(0.75).max(system.c.sqrt());
    4.0 * h_sup * system.gamma_max() * cpow
}

fn check_z(z: Complex64) -> Result<()> {
    if z.im.is_nan() || z.im <= 0.0 {
        return Err(Error::UpperHalfPlane { re: z.re, im: z.im });
    }
    Ok(())
}

/// Total mass m_nu = sum_atoms weight * effective_h(lambda, nu) of the
/// kernel's representing measure at frequency nu.
pub fn mass_mnu(model: &ProcessModel, nu: f64) -> Result<f64> {
    model.validate()?;
    let mut acc = 0.0;
    for (a, atom) in model.param_distribution.atoms.iter().enumerate() {
        acc += atom.weight * model.effective_h_at(a, nu)?;
    }
    Ok(acc)
}

fn solve_system(
    system: KernelSystem,
    z: Complex64,
    cfg: &SolverConfig,
) -> Result<StieltjesKernelGrid> {
    let run = run_chain(&system, z.re, &[z.im], cfg)?;
    let (_, values, residual) = run.snapshots.into_iter().next().expect("one target height");
    Ok(StieltjesKernelGrid {
        z,
        nu: system.nu,
        values,
        mass: system.mass,
        converged: true,
        iterations: run.total_iterations,
        residual,
        im_clipped: run.clipped,
        system_hash: system.hash,
    })
}

/// Solves the kernel fixed point for the lag-tau limiting spectrum at z.
pub fn solve_kernel(
    model: &ProcessModel,
    c: f64,
    tau: usize,
    z: Complex64,
    config: &SolverConfig,
) -> Result<StieltjesKernelGrid> {
    config.validate()?;
    check_z(z)?;
    let system = KernelSystem::from_model(model, c, &GammaSpec::Lag(tau), config.nu_grid_size)?;
    solve_system(system, z, config)
}

/// Single-height solve at z from a chosen start, without continuation.
/// Intended for the provable-contraction regime (large Im z).
pub fn solve_kernel_from(
    model: &ProcessModel,
    c: f64,
    tau: usize,
    z: Complex64,
    config: &SolverConfig,
    start: KernelStart,
) -> Result<StieltjesKernelGrid> {
    config.validate()?;
    check_z(z)?;
    let system = KernelSystem::from_model(model, c, &GammaSpec::Lag(tau), config.nu_grid_size)?;
    let k0 = match start {
        KernelStart::Asymptotic => system.asymptotic_start(z.im),
        KernelStart::Zero => vec![Complex64::new(0.0, 0.0); system.nu.len()],
    };
    let res = iterate_height(&system, z, k0, config);
    if !res.converged {
        return Err(Error::SolverDiverged {
            z,
            v_step: z.im,
            residual: res.residual,
            iterations: res.iterations,
        });
    }
    Ok(StieltjesKernelGrid {
        z,
        nu: system.nu,
        values: res.values,
        mass: system.mass,
        converged: true,
        iterations: res.iterations,
        residual: res.residual,
        im_clipped: res.clipped,
        system_hash: system.hash,
    })
}

fn evaluate_with_kernel(
    system: &KernelSystem,
    z: Complex64,
    kernel: &StieltjesKernelGrid,
) -> Result<Complex64> {
    if !kernel.converged {
        return Err(Error::KernelMismatch("kernel is not converged".into()));
    }
    if kernel.system_hash != system.hash {
        return Err(Error::KernelMismatch(
            "kernel was solved for a different model, aspect ratio, weight factor, or grid".into(),
        ));
    }
    if kernel.z != z {
        return Err(Error::KernelMismatch(format!(
            "kernel was solved at z = {}, requested z = {}",
            kernel.z, z
        )));
    }
    Ok(system.stieltjes(&kernel.values, z))
}

/// Limiting Stieltjes transform s(z) of the lag-tau spectrum, evaluated
/// from a kernel previously solved at the same (model, c, tau, z).
pub fn stieltjes_lsd(
    model: &ProcessModel,
    c: f64,
    tau: usize,
    z: Complex64,
    kernel: &StieltjesKernelGrid,
) -> Result<Complex64> {
    check_z(z)?;
    let system = KernelSystem::from_model(model, c, &GammaSpec::Lag(tau), kernel.nu.len())?;
    evaluate_with_kernel(&system, z, kernel)
}

/// Kernel fixed point for the tapered spectral estimator's limit at
/// frequency eta.
pub fn solve_tapered_kernel(
    model: &ProcessModel,
    c: f64,
    taper: &TaperSpec,
    eta: f64,
    z: Complex64,
    config: &SolverConfig,
) -> Result<StieltjesKernelGrid> {
    config.validate()?;
    taper.validate()?;
    check_z(z)?;
    let system =
        KernelSystem::from_model(model, c, &GammaSpec::Taper(taper, eta), config.nu_grid_size)?;
    solve_system(system, z, config)
}

/// Limiting Stieltjes transform of the tapered estimator's spectrum.
pub fn stieltjes_tapered(
    model: &ProcessModel,
    c: f64,
    taper: &TaperSpec,
    eta: f64,
    z: Complex64,
    kernel: &StieltjesKernelGrid,
) -> Result<Complex64> {
    taper.validate()?;
    check_z(z)?;
    let system = KernelSystem::new(
        model,
        c,
        &GammaSpec::Taper(taper, eta),
        kernel.nu.clone(),
        model.param_distribution.atoms.iter().map(|a| a.weight).collect(),
    )?;
    evaluate_with_kernel(&system, z, kernel)
}

/// Convenience: solve the lag-tau kernel at z and evaluate s(z).
pub fn lsd_transform(
    model: &ProcessModel,
    c: f64,
    tau: usize,
    z: Complex64,
    config: &SolverConfig,
) -> Result<Complex64> {
    config.validate()?;
    check_z(z)?;
    let system = KernelSystem::from_model(model, c, &GammaSpec::Lag(tau), config.nu_grid_size)?;
    let run = run_chain(&system, z.re, &[z.im], config)?;
    let (_, values, _) = &run.snapshots[0];
    Ok(system.stieltjes(values, z))
}

/// Convenience: solve the tapered kernel at z and evaluate s(z).
pub fn tapered_transform(
    model: &ProcessModel,
    c: f64,
    taper: &TaperSpec,
    eta: f64,
    z: Complex64,
    config: &SolverConfig,
) -> Result<Complex64> {
    config.validate()?;
    taper.validate()?;
    check_z(z)?;
    let system =
        KernelSystem::from_model(model, c, &GammaSpec::Taper(taper, eta), config.nu_grid_size)?;
    let run = run_chain(&system, z.re, &[z.im], config)?;
    let (_, values, _) = &run.snapshots[0];
    Ok(system.stieltjes(values, z))
}

fn transform_column_impl(
    system: &KernelSystem,
    x: f64,
    heights: &[f64],
    config: &SolverConfig,
) -> Result<Vec<Complex64>> {
    if heights.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if heights.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::UpperHalfPlane {
            re: x,
            im: heights.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let mut sorted: Vec<f64> = heights.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted.dedup();
    let run = run_chain(system, x, &sorted, config)?;
    let s_at = |v: f64| -> Complex64 {
        let (_, values, _) = run
            .snapshots
            .iter()
            .find(|(sv, _, _)| *sv == v)
            .expect("every target height has a snapshot");
        system.stieltjes(values, Complex64::new(x, v))
    };
    Ok(heights.iter().map(|&v| s_at(v)).collect())
}

/// Evaluates s(x + i v) at several heights v over one real abscissa x,
/// sharing a single warm-started continuation chain. Results are returned
/// in the order of `heights`.
pub fn transform_column(
    model: &ProcessModel,
    c: f64,
    tau: usize,
    x: f64,
    heights: &[f64],
    config: &SolverConfig,
) -> Result<Vec<Complex64>> {
    config.validate()?;
    let system = KernelSystem::from_model(model, c, &GammaSpec::Lag(tau), config.nu_grid_size)?;
    transform_column_impl(&system, x, heights, config)
}

/// Tapered-estimator version of [`transform_column`].
pub fn tapered_transform_column(
    model: &ProcessModel,
    c: f64,
    taper: &TaperSpec,
    eta: f64,
    x: f64,
    heights: &[f64],
    config: &SolverConfig,
) -> Result<Vec<Complex64>> {
    config.validate()?;
    taper.validate()?;
    let system =
        KernelSystem::from_model(model, c, &GammaSpec::Taper(taper, eta), config.nu_grid_size)?;
    transform_column_impl(&system, x, heights, config)
}

/// Finite-sample deterministic equivalent: the diagonal of H(z) over the
/// p rows, using the n Fourier frequencies, the empirical atom weights of
/// `assignment` (atom index per row), and c_n = p/n.
///
/// Row j gets -U_{a(j)} / z with U computed from the kernel solved on
/// exactly that grid.
pub fn deterministic_equivalent_hn(
    model: &ProcessModel,
    assignment: &[usize],
    n: usize,
    tau: usize,
    z: Complex64,
    config: &SolverConfig,
) -> Result<Vec<Complex64>> {
    config.validate()?;
    check_z(z)?;
    if n == 0 || assignment.is_empty() {
        return Err(Error::InvalidConfig("need n >= 1 and at least one row".into()));
    }
    let n_atoms = model.param_distribution.atoms.len();
    if assignment.iter().any(|&a| a >= n_atoms) {
        return Err(Error::InvalidConfig(format!(
            "assignment references atom >= {n_atoms}"
        )));
    }
    let p = assignment.len();
    let mut counts = vec![0usize; n_atoms];
    for &a in assignment {
        counts[a] += 1;
    }
    let weights: Vec<f64> = counts.iter().map(|&k| k as f64 / p as f64).collect();
    let c_n = p as f64 / n as f64;
    let system = KernelSystem::new(model, c_n, &GammaSpec::Lag(tau), fourier_grid(n), weights)?;
    let run = run_chain(&system, z.re, &[z.im], config)?;
    let (_, values, _) = &run.snapshots[0];
    let u = system.u_values(values);
    Ok(assignment.iter().map(|&a| -u[a] / z).collect())
}
