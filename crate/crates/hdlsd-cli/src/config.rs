//! Experiment configuration: one JSON document describes the model, the
//! dimension ladder, the lags, and the solver settings for every
//! subcommand. Configs are validated on load; any violation is a config
//! error, distinct from runtime cell failures.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hdlsd::lsd_solver::SolverConfig;
use hdlsd::model::{FamilyKind, ProcessModel, TaperSpec};

/// Pipeline a config is written for. The subcommand chooses what actually
/// runs; a mismatch is reported as a note, not an error, so one config can
/// drive related modes (for example `compare` and its `taper` counterpart).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Esd,
    Lsd,
    Compare,
    Taper,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Esd => "esd",
            Mode::Lsd => "lsd",
            Mode::Compare => "compare",
            Mode::Taper => "taper",
        }
    }
}

fn default_curve_points() -> usize {
    512
}

/// Declarative description of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: ProcessModel,
    /// Limiting aspect ratio p/n; the sample length is n = round(p / c).
    pub c: f64,
    /// Matrix dimensions to run, one ladder rung per entry.
    pub p_list: Vec<usize>,
    /// Autocovariance lags to estimate and solve for.
    pub taus: Vec<usize>,
    /// Independent sample paths per (p, tau) cell.
    pub replicates: u64,
    /// Master seed; per-path seeds are derived from (seed, p, replicate).
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Simulation truncation order q; omitted means a family-derived
    /// default (exact tap count for finite families, q_max for ARMA).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Abscissa count of emitted limit curves.
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    /// Evaluation heights for curve inversion, positive and strictly
    /// decreasing; omitted means the library default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_sequence: Option<Vec<f64>>,
    /// Lag-weight taper; required by `taper` mode, ignored elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper: Option<TaperSpec>,
    /// Center frequency of the tapered spectral estimator.
    #[serde(default)]
    pub eta: f64,
}

impl ExperimentConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            bail!("c must be a finite positive real, got {}", self.c);
        }
        if self.p_list.is_empty() {
            bail!("p_list must be nonempty");
        }
        if self.taus.is_empty() {
            bail!("taus must be nonempty");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        if self.curve_points < 2 {
            bail!("curve_points must be at least 2");
        }
        if !self.eta.is_finite() {
            bail!("eta must be finite");
        }
        let max_tau = *self.taus.iter().max().unwrap();
        for &p in &self.p_list {
            if p == 0 {
                bail!("p_list entries must be at least 1");
            }
            let n = self.n_for(p);
            if n < max_tau + 1 {
                bail!("p = {p} gives n = round(p / c) = {n}, below max lag + 1 = {}", max_tau + 1);
            }
        }
        if let Some(v) = &self.v_sequence {
            if v.len() < 2 {
                bail!("v_sequence needs at least two heights");
            }
            if v.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
                bail!("v_sequence heights must be finite and positive");
            }
            if v.windows(2).any(|w| w[1] >= w[0]) {
                bail!("v_sequence must be strictly decreasing");
            }
        }
        if self.mode == Mode::Taper && self.taper.is_none() {
            bail!("taper mode needs a `taper` section");
        }
        self.model.validate().context("model")?;
        self.solver.validate().context("solver")?;
        if let Some(t) = &self.taper {
            t.validate().context("taper")?;
        }
        Ok(())
    }

    /// Sample length paired with dimension p under the aspect ratio c.
    pub fn n_for(&self, p: usize) -> usize {
        (p as f64 / self.c).round() as usize
    }

    /// Simulation truncation order: explicit if given, otherwise the
    /// family's own reach (finite families stop at their tap table).
    pub fn truncation_for(&self) -> usize {
        if let Some(q) = self.truncation {
            return q;
        }
        match self.model.family.kind {
            FamilyKind::Identity => 0,
            FamilyKind::Arma11 => self.model.family.q_max,
            FamilyKind::TabulatedMa | FamilyKind::IidRows => {
                let max_len = self
                    .model
                    .param_distribution
                    .atoms
                    .iter()
                    .map(|a| a.lambda.len())
                    .max()
                    .unwrap_or(0);
                self.model.family.q_max.min(max_len)
            }
        }
    }

    /// Inversion heights to use for curve evaluation.
    pub fn heights(&self) -> Vec<f64> {
        self.v_sequence
            .clone()
            .unwrap_or_else(|| hdlsd::inversion::DEFAULT_V_SEQUENCE.to_vec())
    }
}
