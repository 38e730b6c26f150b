//! Mode runners. Each subcommand maps to one runner that executes a grid
//! of cells, records per-cell outcomes (a failing cell never aborts its
//! siblings), and emits deterministic artifacts plus `summary.json` and a
//! copy of the effective config.
//!
//! Determinism: every data artifact is a pure function of the config and
//! the seed. Per-path seeds derive from (seed, p, replicate) only, so lag
//! cells at the same p compare estimators on identical draws, and thread
//! scheduling cannot change any output. Wall-clock fields in the summary
//! are the one exception and are documented as such.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hdlsd::autocov::{sym_autocov, tapered_spectral};
use hdlsd::inversion::{
    default_x_grid, density_curve, spectral_radius_bound, symmetric_grid, SpectralCurve,
};
use hdlsd::io::{write_curve_csv, write_esd_csv, write_path_file};
use hdlsd::lsd_solver::{
    solve_kernel, solve_tapered_kernel, tapered_transform_column, transform_column,
};
use hdlsd::model::TaperSpec;
use hdlsd::simulate::{mix_seed, simulate_path, SimulatedPath};
use hdlsd::spectra::{eigenvalues, ks_distance, Esd};

use crate::config::ExperimentConfig;

/// What the binary was asked to run. `Simulate` stores paths only and has
/// no `Mode` counterpart; the other four mirror the config modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Simulate,
    Esd,
    Lsd,
    Compare,
    Taper,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Simulate => "simulate",
            Action::Esd => "esd",
            Action::Lsd => "lsd",
            Action::Compare => "compare",
            Action::Taper => "taper",
        }
    }
}

/// One cell of an experiment grid. Unused coordinates stay `None`; a cell
/// that failed carries `error` and whatever files it wrote before failing.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CellReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
    /// KS distance between each replicate's spectrum and the limit curve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ks: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_median: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_at_zero: Option<f64>,
    /// Diagnostics from a reference kernel solve at z = i v_min.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_converged: Option<bool>,
    /// Wall-clock seconds; varies between runs and is excluded from the
    /// determinism guarantee.
    pub runtime_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellReport {
    fn line(&self) -> String {
        let mut coords = Vec::new();
        if let Some(p) = self.p {
            coords.push(format!("p={p}"));
        }
        if let Some(tau) = self.tau {
            coords.push(format!("tau={tau}"));
        }
        if let Some(r) = self.replicate {
            coords.push(format!("r={r}"));
        }
        if let Some(eta) = self.eta {
            coords.push(format!("eta={eta}"));
        }
        let head = if coords.is_empty() { "cell".into() } else { format!("cell {}", coords.join(" ")) };
        match (&self.error, self.ks_median) {
            (Some(e), _) => format!("{head}: FAILED: {e}"),
            (None, Some(med)) => format!(
                "{head}: ks_median={med:.4} ks_max={:.4} ({:.2} s)",
                self.ks_max.unwrap_or(f64::NAN),
                self.runtime_s
            ),
            (None, None) => format!("{head}: ok ({:.2} s)", self.runtime_s),
        }
    }
}

/// Machine-readable run record written to `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub c: f64,
    pub seed: u64,
    pub failed_cells: usize,
    /// Wall-clock seconds; not covered by the determinism guarantee.
    pub total_runtime_s: f64,
    pub cells: Vec<CellReport>,
}

/// Runs one experiment into `out` and returns the number of failed cells.
/// The config must already carry the effective seed (CLI overrides are
/// applied by the caller); it is copied to `out/config.json` verbatim.
pub fn run(action: Action, cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    if action.name() != cfg.mode.name() && action != Action::Simulate {
        eprintln!(
            "note: config declares mode `{}`, running `{}`",
            cfg.mode.name(),
            action.name()
        );
    }
    if action == Action::Taper && cfg.taper.is_none() {
        anyhow::bail!("taper run needs a `taper` section in the config");
    }
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let config_json = serde_json::to_string_pretty(cfg).context("serializing config")?;
    fs::write(out.join("config.json"), config_json + "\n").context("writing config.json")?;

    let t0 = Instant::now();
    let cells = match action {
        Action::Simulate => simulate_cells(cfg, out),
        Action::Esd => esd_cells(cfg, out),
        Action::Lsd => lsd_cells(cfg, out),
        Action::Compare => compare_cells(cfg, out),
        Action::Taper => taper_cells(cfg, out),
    }?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    for cell in &cells {
        println!("{}", cell.line());
    }

    let summary = Summary {
        mode: action.name().into(),
        c: cfg.c,
        seed: cfg.seed,
        failed_cells: failed,
        total_runtime_s: t0.elapsed().as_secs_f64(),
        cells,
    };
    let summary_json = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    fs::write(out.join("summary.json"), summary_json + "\n").context("writing summary.json")?;
    println!(
        "{}: {} cells, {} failed -> {}",
        action.name(),
        summary.cells.len(),
        failed,
        out.display()
    );
    Ok(failed)
}

/// Seed for the path of replicate `r` at dimension `p`. Depends only on
/// (master seed, p, r) so every mode and lag sees the same draws.
fn path_seed(seed: u64, p: usize, r: u64) -> u64 {
    mix_seed(seed, ((p as u64) << 32) ^ r)
}

fn write_file<F>(out: &Path, name: &str, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> hdlsd::error::Result<()>,
{
    let file = File::create(out.join(name))
        .with_context(|| format!("creating {}", out.join(name).display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {name}"))?;
    w.flush().with_context(|| format!("flushing {name}"))?;
    Ok(())
}

/// Simulates all replicates for one p in parallel. Errors are kept as
/// strings so several cells can report the same failed draw.
fn simulate_replicates(
    cfg: &ExperimentConfig,
    p: usize,
    n: usize,
    q: usize,
) -> Vec<Result<SimulatedPath, String>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            simulate_path(&cfg.model, p, n, q, path_seed(cfg.seed, p, r))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn fill_ks_stats(cell: &mut CellReport, ks: Vec<f64>) {
    if !ks.is_empty() {
        cell.ks_median = Some(median(ks.clone()));
        cell.ks_max = Some(ks.iter().cloned().fold(f64::MIN, f64::max));
    }
    cell.ks = ks;
}

/// A solved limit curve plus diagnostics from a reference kernel solve at
/// z = i v_min (the hardest height the curve evaluation used).
struct SolvedCurve {
    curve: SpectralCurve,
    residual: f64,
    iterations: usize,
    converged: bool,
}

impl SolvedCurve {
    fn fill(&self, cell: &mut CellReport) {
        cell.atom_at_zero = Some(self.curve.atom_at_zero);
        cell.kernel_residual = Some(self.residual);
        cell.kernel_iterations = Some(self.iterations);
        cell.kernel_converged = Some(self.converged);
    }
}

fn lag_curve(cfg: &ExperimentConfig, tau: usize, heights: &[f64]) -> Result<SolvedCurve> {
    let grid = default_x_grid(&cfg.model, cfg.c, cfg.curve_points);
    let curve = density_curve(
        |x, hs| transform_column(&cfg.model, cfg.c, tau, x, hs, &cfg.solver),
        &grid,
        heights,
    )
    .with_context(|| format!("limit curve for lag {tau}"))?;
    let v_min = *heights.last().unwrap();
    let k = solve_kernel(&cfg.model, cfg.c, tau, Complex64::new(0.0, v_min), &cfg.solver)
        .context("reference kernel solve")?;
    Ok(SolvedCurve {
        curve,
        residual: k.residual,
        iterations: k.iterations,
        converged: k.converged,
    })
}

/// Largest absolute value of the taper symbol; scales the curve support.
fn taper_symbol_sup(taper: &TaperSpec) -> f64 {
    let mut acc = 1.0;
    for tau in 1..taper.horizon {
        acc += 2.0 * taper.weight(tau).abs();
    }
    acc
}

fn taper_curve(cfg: &ExperimentConfig, taper: &TaperSpec, heights: &[f64]) -> Result<SolvedCurve> {
    let half_width = spectral_radius_bound(&cfg.model, cfg.c) * taper_symbol_sup(taper);
    let grid = symmetric_grid(half_width, cfg.curve_points);
    let curve = density_curve(
        |x, hs| tapered_transform_column(&cfg.model, cfg.c, taper, cfg.eta, x, hs, &cfg.solver),
        &grid,
        heights,
    )
    .context("tapered limit curve")?;
    let v_min = *heights.last().unwrap();
    let k = solve_tapered_kernel(
        &cfg.model,
        cfg.c,
        taper,
        cfg.eta,
        Complex64::new(0.0, v_min),
        &cfg.solver,
    )
    .context("reference kernel solve")?;
    Ok(SolvedCurve {
        curve,
        residual: k.residual,
        iterations: k.iterations,
        converged: k.converged,
    })
}

fn simulate_cells(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CellReport>> {
    let q = cfg.truncation_for();
    let mut cells = Vec::new();
    for &p in &cfg.p_list {
        let n = cfg.n_for(p);
        for r in 0..cfg.replicates {
            let t = Instant::now();
            let mut cell = CellReport {
                p: Some(p),
                n: Some(n),
                replicate: Some(r),
                ..CellReport::default()
            };
            let outcome = simulate_path(&cfg.model, p, n, q, path_seed(cfg.seed, p, r))
                .map_err(anyhow::Error::from)
                .and_then(|path| {
                    let name = format!("path_p{p}_r{r}.bin");
                    write_path_file(&path, &out.join(&name))
                        .with_context(|| format!("writing {name}"))?;
                    Ok(name)
                });
            match outcome {
                Ok(name) => cell.files.push(name),
                Err(e) => cell.error = Some(format!("{e:#}")),
            }
            cell.runtime_s = t.elapsed().as_secs_f64();
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Spectra of the symmetrized lag-`tau` estimates for every replicate.
fn lag_esds(paths: &[Result<SimulatedPath, String>], tau: usize) -> Vec<Result<Esd, String>> {
    paths
        .par_iter()
        .map(|pr| match pr {
            Ok(path) => sym_autocov(path, tau)
                .and_then(|m| eigenvalues(&m))
                .map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        })
        .collect()
}

fn esd_cells(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CellReport>> {
    let q = cfg.truncation_for();
    let mut cells = Vec::new();
    for &p in &cfg.p_list {
        let n = cfg.n_for(p);
        let paths = simulate_replicates(cfg, p, n, q);
        for &tau in &cfg.taus {
            let t = Instant::now();
            let mut cell = CellReport {
                p: Some(p),
                n: Some(n),
                tau: Some(tau),
                ..CellReport::default()
            };
            let outcome = (|| -> Result<Vec<String>> {
                let mut files = Vec::new();
                for (r, res) in lag_esds(&paths, tau).iter().enumerate() {
                    let esd = res.as_ref().map_err(|e| anyhow!("replicate {r}: {e}"))?;
                    let name = format!("esd_tau{tau}_p{p}_r{r}.csv");
                    write_file(out, &name, |w| write_esd_csv(esd, w))?;
                    files.push(name);
                }
                Ok(files)
            })();
            match outcome {
                Ok(files) => cell.files = files,
                Err(e) => cell.error = Some(format!("{e:#}")),
            }
            cell.runtime_s = t.elapsed().as_secs_f64();
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn lsd_cells(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CellReport>> {
    let heights = cfg.heights();
    let mut cells = Vec::new();
    for &tau in &cfg.taus {
        let t = Instant::now();
        let mut cell = CellReport {
            tau: Some(tau),
            ..CellReport::default()
        };
        let outcome = lag_curve(cfg, tau, &heights).and_then(|solved| {
            let name = format!("curve_tau{tau}.csv");
            write_file(out, &name, |w| write_curve_csv(&solved.curve, w))?;
            Ok((solved, name))
        });
        match outcome {
            Ok((solved, name)) => {
                cell.files.push(name);
                solved.fill(&mut cell);
            }
            Err(e) => cell.error = Some(format!("{e:#}")),
        }
        cell.runtime_s = t.elapsed().as_secs_f64();
        cells.push(cell);
    }
    Ok(cells)
}

fn compare_cells(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CellReport>> {
    let q = cfg.truncation_for();
    let heights = cfg.heights();
    // One limit curve per lag, shared by every p on the ladder.
    let curves: Vec<(usize, Result<SolvedCurve, String>)> = cfg
        .taus
        .iter()
        .map(|&tau| (tau, lag_curve(cfg, tau, &heights).map_err(|e| format!("{e:#}"))))
        .collect();

    let mut cells = Vec::new();
    for &p in &cfg.p_list {
        let n = cfg.n_for(p);
        let paths = simulate_replicates(cfg, p, n, q);
        for (tau, curve_res) in &curves {
            let tau = *tau;
            let t = Instant::now();
            let mut cell = CellReport {
                p: Some(p),
                n: Some(n),
                tau: Some(tau),
                ..CellReport::default()
            };
            let outcome = (|| -> Result<(Vec<String>, Vec<f64>)> {
                let solved = curve_res.as_ref().map_err(|e| anyhow!("{e}"))?;
                let curve_name = format!("curve_tau{tau}_p{p}.csv");
                write_file(out, &curve_name, |w| write_curve_csv(&solved.curve, w))?;
                let mut files = vec![curve_name];
                let mut ks = Vec::new();
                for (r, res) in lag_esds(&paths, tau).iter().enumerate() {
                    let esd = res.as_ref().map_err(|e| anyhow!("replicate {r}: {e}"))?;
                    let name = format!("esd_tau{tau}_p{p}_r{r}.csv");
                    write_file(out, &name, |w| write_esd_csv(esd, w))?;
                    files.push(name);
                    ks.push(ks_distance(esd, &solved.curve, &[])?);
                }
                Ok((files, ks))
            })();
            match outcome {
                Ok((files, ks)) => {
                    cell.files = files;
                    fill_ks_stats(&mut cell, ks);
                    if let Ok(solved) = curve_res {
                        solved.fill(&mut cell);
                    }
                }
                Err(e) => cell.error = Some(format!("{e:#}")),
            }
            cell.runtime_s = t.elapsed().as_secs_f64();
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn taper_cells(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CellReport>> {
    let taper = cfg.taper.as_ref().expect("presence checked in run()");
    let q = cfg.truncation_for();
    let heights = cfg.heights();
    let curve_res = taper_curve(cfg, taper, &heights).map_err(|e| format!("{e:#}"));
    if let Ok(solved) = &curve_res {
        write_file(out, "curve_taper.csv", |w| write_curve_csv(&solved.curve, w))?;
    }

    let mut cells = Vec::new();
    for &p in &cfg.p_list {
        let n = cfg.n_for(p);
        let paths = simulate_replicates(cfg, p, n, q);
        let t = Instant::now();
        let mut cell = CellReport {
            p: Some(p),
            n: Some(n),
            eta: Some(cfg.eta),
            ..CellReport::default()
        };
        let outcome = (|| -> Result<(Vec<String>, Vec<f64>)> {
            let solved = curve_res.as_ref().map_err(|e| anyhow!("{e}"))?;
            let mut files = vec!["curve_taper.csv".to_string()];
            let mut ks = Vec::new();
            let esds: Vec<Result<Esd, String>> = paths
                .par_iter()
                .map(|pr| match pr {
                    Ok(path) => tapered_spectral(path, taper, cfg.eta)
                        .and_then(|m| eigenvalues(&m))
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                })
                .collect();
            for (r, res) in esds.iter().enumerate() {
                let esd = res.as_ref().map_err(|e| anyhow!("replicate {r}: {e}"))?;
                let name = format!("esd_taper_p{p}_r{r}.csv");
                write_file(out, &name, |w| write_esd_csv(esd, w))?;
                files.push(name);
                ks.push(ks_distance(esd, &solved.curve, &[])?);
            }
            Ok((files, ks))
        })();
        match outcome {
            Ok((files, ks)) => {
                cell.files = files;
                fill_ks_stats(&mut cell, ks);
                if let Ok(solved) = &curve_res {
                    solved.fill(&mut cell);
                }
            }
            Err(e) => cell.error = Some(format!("{e:#}")),
        }
        cell.runtime_s = t.elapsed().as_secs_f64();
        cells.push(cell);
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdlsd::model::TaperKind;

    #[test]
    fn median_handles_both_parities() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn degenerate_taper_has_unit_symbol_sup() {
        let sup = taper_symbol_sup(&TaperSpec::lag_zero_only());
        assert_eq!(sup, 1.0);
        let geo = TaperSpec::new(TaperKind::Geometric { beta: 0.5 }, 3).unwrap();
        // 1 + 2(0.5 + 0.25)
        assert_eq!(taper_symbol_sup(&geo), 2.5);
    }

    #[test]
    fn path_seeds_separate_cells() {
        let s = 42;
        assert_ne!(path_seed(s, 10, 0), path_seed(s, 10, 1));
        assert_ne!(path_seed(s, 10, 0), path_seed(s, 20, 0));
        assert_eq!(path_seed(s, 10, 3), path_seed(s, 10, 3));
    }
}
