//! Process specifications: coefficient families, spectral-parameter
//! distributions, transfer functions, tapers, and assumption validation.
//!
//! Everything here is pure and deterministic; randomness only enters in
//! [`crate::simulate`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation order for infinite-order coefficient families.
///
/// Exceeds the cube-root truncation rule for every supported dimension
/// (p <= 4096 gives a cube root of 16), so truncation error is spectrally
/// negligible at this order for geometrically decaying tap sequences.
pub const DEFAULT_Q_MAX: usize = 64;

/// How lag-coefficient values f_ell(lambda) are produced from an atom's
/// parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// White noise: f_ell = 0 for ell >= 1.
    Identity,
    /// Causal ARMA(1,1): lambda = (phi, theta), f_ell = (theta+phi)*phi^(ell-1).
    Arma11,
    /// Finite moving average: lambda = (f_1, ..., f_q) read directly as taps.
    TabulatedMa,
    /// Same tap layout as `TabulatedMa`, but each coordinate is an
    /// independent scalar linear process (diagonal coefficient matrices).
    IidRows,
}

/// A coefficient family f_ell together with its evaluation truncation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFamily {
    pub kind: FamilyKind,
    /// Truncation order: transfer functions sum taps for ell = 0..=q_max.
    #[serde(default = "default_q_max")]
    pub q_max: usize,
}

fn default_q_max() -> usize {
    DEFAULT_Q_MAX
}

impl CoefficientFamily {
    pub fn new(kind: FamilyKind, q_max: usize) -> Self {
        Self { kind, q_max }
    }

    pub fn identity() -> Self {
        Self::new(FamilyKind::Identity, 0)
    }

    pub fn arma11() -> Self {
        Self::new(FamilyKind::Arma11, DEFAULT_Q_MAX)
    }

    pub fn tabulated_ma() -> Self {
        Self::new(FamilyKind::TabulatedMa, DEFAULT_Q_MAX)
    }

    pub fn iid_rows() -> Self {
        Self::new(FamilyKind::IidRows, DEFAULT_Q_MAX)
    }

    /// Parameter dimension the family requires, if it pins one.
    pub fn required_dim(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::Arma11 => Some(2),
            _ => None,
        }
    }

    /// Checks `lambda` against the family's required dimension.
    pub fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if let Some(want) = self.required_dim() {
            if lambda.len() != want {
                return Err(Error::DimensionMismatch {
                    want,
                    got: lambda.len(),
                });
            }
        }
        Ok(())
    }

    /// Lag coefficient f_ell(lambda); f_0 = 1 for every family.
    pub fn tap(&self, lambda: &[f64], ell: usize) -> Result<f64> {
        self.check_lambda(lambda)?;
        if ell == 0 {
            return Ok(1.0);
        }
        match self.kind {
            FamilyKind::Identity => Ok(0.0),
            FamilyKind::Arma11 => arma11_coeff(lambda[0], lambda[1], ell),
            FamilyKind::TabulatedMa | FamilyKind::IidRows => {
                Ok(lambda.get(ell - 1).copied().unwrap_or(0.0))
            }
        }
    }

    /// All taps (f_0, ..., f_q) for one atom, truncated at `q`.
    pub fn taps(&self, lambda: &[f64], q: usize) -> Result<Vec<f64>> {
        (0..=q).map(|ell| self.tap(lambda, ell)).collect()
    }
}

/// ARMA(1,1) lag coefficient: 1 at ell = 0, (theta+phi)*phi^(ell-1) after.
pub fn arma11_coeff(phi: f64, theta: f64, ell: usize) -> Result<f64> {
    if phi.is_nan() || phi.abs() >= 1.0 {
        return Err(Error::NonCausal { phi });
    }
    if ell == 0 {
        Ok(1.0)
    } else {
        Ok((theta + phi) * phi.powi(ell as i32 - 1))
    }
}

/// Transfer function psi(lambda, nu) = sum_{ell=0..q_max} e^{i ell nu} f_ell(lambda).
pub fn psi(family: &CoefficientFamily, lambda: &[f64], nu: f64) -> Result<Complex64> {
    family.check_lambda(lambda)?;
    let upper = match family.kind {
        FamilyKind::Identity => 0,
        FamilyKind::Arma11 => family.q_max,
        FamilyKind::TabulatedMa | FamilyKind::IidRows => family.q_max.min(lambda.len()),
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for ell in 0..=upper {
        let f = family.tap(lambda, ell)?;
        if f != 0.0 {
            let angle = ell as f64 * nu;
            acc += Complex64::new(angle.cos(), angle.sin()) * f;
        }
    }
    Ok(acc)
}

/// Power transfer h(lambda, nu) = |psi(lambda, nu)|^2.
pub fn power_transfer(family: &CoefficientFamily, lambda: &[f64], nu: f64) -> Result<f64> {
    Ok(psi(family, lambda, nu)?.norm_sqr())
}

/// One atom of a discrete spectral-parameter distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: Vec<f64>,
    pub weight: f64,
}

/// Discrete mixture representing the limiting parameter distribution: atoms
/// in R^m with weights summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParamDistribution {
    pub atoms: Vec<Atom>,
}

/// Absolute tolerance on the atom-weight normalization.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl SpectralParamDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let dist = Self { atoms };
        dist.validate()?;
        Ok(dist)
    }

    /// Single atom with full mass.
    pub fn point_mass(lambda: Vec<f64>) -> Self {
        Self {
            atoms: vec![Atom { lambda, weight: 1.0 }],
        }
    }

    /// Atoms from (lambda, weight) pairs.
    pub fn from_weighted(pairs: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(lambda, weight)| Atom { lambda, weight })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidModel("distribution has no atoms".into()));
        }
        let m = self.atoms[0].lambda.len();
        let mut sum = 0.0;
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.lambda.len() != m {
                return Err(Error::InvalidModel(format!(
                    "atom {i} has dimension {}, expected {m}",
                    atom.lambda.len()
                )));
            }
            if !atom.lambda.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidModel(format!("atom {i} has non-finite lambda")));
            }
            if !(atom.weight > 0.0 && atom.weight <= 1.0) {
                return Err(Error::InvalidModel(format!(
                    "atom {i} weight {} outside (0, 1]",
                    atom.weight
                )));
            }
            sum += atom.weight;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "atom weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        Ok(())
    }

    /// Parameter dimension m shared by all atoms.
    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, |a| a.lambda.len())
    }
}

/// Innovation law for the i.i.d. driving array; all laws have mean 0 and
/// variance 1 (complex case: independent real/imaginary parts of variance 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationLaw {
    RealGaussian,
    ComplexGaussian,
    Rademacher,
    StandardizedUniform,
}

impl InnovationLaw {
    pub fn is_complex(self) -> bool {
        matches!(self, InnovationLaw::ComplexGaussian)
    }
}

/// Basis in which the coefficient matrices are diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationKind {
    IdentityU,
    RandomOrthogonalU,
}

/// Full generative + limit description of the process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub family: CoefficientFamily,
    /// Discrete mixture of parameter vectors the rows are drawn from.
    pub param_distribution: SpectralParamDistribution,
    /// Per-atom nonnegative scale g_B; absent means g_B = 1 everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Vec<f64>>,
    /// Causal filter coefficients (b_0, b_1, ...); absent means b = (1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Vec<f64>>,
    pub innovation: InnovationLaw,
    pub rotation: RotationKind,
}

impl ProcessModel {
    pub fn new(
        family: CoefficientFamily,
        param_distribution: SpectralParamDistribution,
        innovation: InnovationLaw,
        rotation: RotationKind,
    ) -> Result<Self> {
        let model = Self {
            family,
            param_distribution,
            scaling: None,
            filter: None,
            innovation,
            rotation,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_scaling(mut self, scaling: Vec<f64>) -> Result<Self> {
        self.scaling = Some(scaling);
        self.validate()?;
        Ok(self)
    }

    pub fn with_filter(mut self, filter: Vec<f64>) -> Result<Self> {
        self.filter = Some(filter);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.param_distribution.validate()?;
        for atom in &self.param_distribution.atoms {
            self.family.check_lambda(&atom.lambda)?;
            // Surfaces causality violations at construction time.
            self.family.tap(&atom.lambda, 1)?;
        }
        if let Some(g) = &self.scaling {
            if g.len() != self.param_distribution.atoms.len() {
                return Err(Error::InvalidModel(format!(
                    "scaling table has {} entries for {} atoms",
                    g.len(),
                    self.param_distribution.atoms.len()
                )));
            }
            if g.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::InvalidModel(
                    "scaling values must be finite and nonnegative".into(),
                ));
            }
            if g.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidModel(
                    "scaling must be positive on at least one atom".into(),
                ));
            }
        }
        if let Some(b) = &self.filter {
            if b.is_empty() {
                return Err(Error::InvalidModel("filter must be nonempty".into()));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("filter values must be finite".into()));
            }
        }
        Ok(())
    }

    /// Scale g_B at the atom with index `a` (1 when no scaling is set).
    pub fn scale_at(&self, a: usize) -> f64 {
        self.scaling.as_ref().map_or(1.0, |g| g[a])
    }

    /// Filter frequency response zeta(nu) = |sum_k b_k e^{ik nu}|^2.
    pub fn zeta(&self, nu: f64) -> f64 {
        match &self.filter {
            None => 1.0,
            Some(b) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &bk) in b.iter().enumerate() {
                    let angle = k as f64 * nu;
                    acc += Complex64::new(angle.cos(), angle.sin()) * bk;
                }
                acc.norm_sqr()
            }
        }
    }

    /// Effective power transfer zeta(nu) * g_B(lambda_a) * h(lambda_a, nu)
    /// for the atom with index `a`.
    pub fn effective_h_at(&self, a: usize, nu: f64) -> Result<f64> {
        let h = power_transfer(&self.family, &self.param_distribution.atoms[a].lambda, nu)?;
        Ok(self.zeta(nu) * self.scale_at(a) * h)
    }

    /// Looks up the atom index whose parameter vector equals `lambda` bitwise.
    pub fn atom_index(&self, lambda: &[f64]) -> Option<usize> {
        self.param_distribution.atoms.iter().position(|a| {
            a.lambda.len() == lambda.len()
                && a.lambda
                    .iter()
                    .zip(lambda)
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }

    /// Convolution taps of the simulated rows for the atom with index `a`:
    /// sqrt(g_B) * (b * f)_ell, truncated so the family part has reach `q`.
    pub fn row_taps(&self, a: usize, q: usize) -> Result<Vec<f64>> {
        let f = self.family.taps(&self.param_distribution.atoms[a].lambda, q)?;
        let scale = self.scale_at(a).sqrt();
        let combined = match &self.filter {
            None => f,
            Some(b) => {
                let mut conv = vec![0.0; f.len() + b.len() - 1];
                for (k, &bk) in b.iter().enumerate() {
                    if bk == 0.0 {
                        continue;
                    }
                    for (ell, &fl) in f.iter().enumerate() {
                        conv[k + ell] += bk * fl;
                    }
                }
                conv
            }
        };
        Ok(combined.into_iter().map(|t| t * scale).collect())
    }

    /// Partial-sum coefficient bound: sum_{ell<=q_max} sup_atoms |f_ell|.
    pub fn lambda_bar(&self) -> f64 {
        let mut total = 0.0;
        for ell in 0..=self.family.q_max {
            let sup = self
                .param_distribution
                .atoms
                .iter()
                .map(|a| self.family.tap(&a.lambda, ell).unwrap_or(0.0).abs())
                .fold(0.0, f64::max);
            total += sup;
        }
        total
    }

    /// Weighted partial sum: sum_{ell<=q_max} ell * sup_atoms |f_ell|.
    pub fn lambda_bar_prime(&self) -> f64 {
        let mut total = 0.0;
        for ell in 1..=self.family.q_max {
            let sup = self
                .param_distribution
                .atoms
                .iter()
                .map(|a| self.family.tap(&a.lambda, ell).unwrap_or(0.0).abs())
                .fold(0.0, f64::max);
            total += ell as f64 * sup;
        }
        total
    }

    /// Upper bound on the effective power transfer over all atoms and
    /// frequencies: sup_a g_a * (sum_ell |f_ell(lambda_a)|)^2 * (sum_k |b_k|)^2.
    pub fn effective_h_bound(&self) -> f64 {
        let zeta_bound: f64 = self
            .filter
            .as_ref()
            .map_or(1.0, |b| b.iter().map(|v| v.abs()).sum::<f64>().powi(2));
        let mut sup = 0.0f64;
        for (a, atom) in self.param_distribution.atoms.iter().enumerate() {
            let abs_sum: f64 = (0..=self.family.q_max)
                .map(|ell| self.family.tap(&atom.lambda, ell).unwrap_or(0.0).abs())
                .sum();
            sup = sup.max(self.scale_at(a) * abs_sum * abs_sum);
        }
        sup * zeta_bound
    }

    /// FNV-1a hash of the full model; stable across runs and used to
    /// tag simulated paths with their generating model.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv::new();
        h.byte(match self.family.kind {
            FamilyKind::Identity => 0,
            FamilyKind::Arma11 => 1,
            FamilyKind::TabulatedMa => 2,
            FamilyKind::IidRows => 3,
        });
        h.u64(self.family.q_max as u64);
        h.u64(self.param_distribution.atoms.len() as u64);
        for atom in &self.param_distribution.atoms {
            h.u64(atom.lambda.len() as u64);
            for &x in &atom.lambda {
                h.u64(x.to_bits());
            }
            h.u64(atom.weight.to_bits());
        }
        match &self.scaling {
            None => h.byte(0),
            Some(g) => {
                h.byte(1);
                h.u64(g.len() as u64);
                for &x in g {
                    h.u64(x.to_bits());
                }
            }
        }
        match &self.filter {
            None => h.byte(0),
            Some(b) => {
                h.byte(1);
                h.u64(b.len() as u64);
                for &x in b {
                    h.u64(x.to_bits());
                }
            }
        }
        h.byte(match self.innovation {
            InnovationLaw::RealGaussian => 0,
            InnovationLaw::ComplexGaussian => 1,
            InnovationLaw::Rademacher => 2,
            InnovationLaw::StandardizedUniform => 3,
        });
        h.byte(match self.rotation {
            RotationKind::IdentityU => 0,
            RotationKind::RandomOrthogonalU => 1,
        });
        h.finish()
    }
}

/// Effective power transfer zeta(nu) * g_B(lambda) * h(lambda, nu).
///
/// When a scaling table is present, `lambda` must be one of the model's
/// atoms so g_B can be resolved.
pub fn effective_h(model: &ProcessModel, lambda: &[f64], nu: f64) -> Result<f64> {
    let g = match (&model.scaling, model.atom_index(lambda)) {
        (None, _) => 1.0,
        (Some(_), Some(a)) => model.scale_at(a),
        (Some(_), None) => {
            return Err(Error::InvalidModel(
                "scaling lookup requires lambda to be one of the model's atoms".into(),
            ))
        }
    };
    let h = power_transfer(&model.family, lambda, nu)?;
    Ok(model.zeta(nu) * g * h)
}

/// Taper weight shapes T_n(tau) for tau >= 1; T_n(0) is always 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TaperKind {
    /// T(tau) = beta^tau with beta in (0, 1).
    Geometric { beta: f64 },
    /// T(tau) = (1 + tau)^(-alpha) with alpha > 2.
    Polynomial { alpha: f64 },
    /// Explicit weights for tau = 1, 2, ...; zero beyond the table.
    TruncatedCustom { weights: Vec<f64> },
}

/// A tapering scheme: an even weight sequence cut off at `horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaperSpec {
    #[serde(flatten)]
    pub kind: TaperKind,
    /// Cutoff: T_n(tau) = 0 for tau >= horizon.
    pub horizon: usize,
}

impl TaperSpec {
    pub fn new(kind: TaperKind, horizon: usize) -> Result<Self> {
        let spec = Self { kind, horizon };
        spec.validate()?;
        Ok(spec)
    }

    /// Taper that keeps only the lag-0 term (taper symbol identically 1).
    pub fn lag_zero_only() -> Self {
        Self {
            kind: TaperKind::TruncatedCustom { weights: Vec::new() },
            horizon: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidTaper("horizon must be >= 1".into()));
        }
        match &self.kind {
            TaperKind::Geometric { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::InvalidTaper(format!(
                        "geometric beta {beta} outside (0, 1)"
                    )));
                }
            }
            TaperKind::Polynomial { alpha } => {
                if alpha.is_nan() || *alpha <= 2.0 {
                    return Err(Error::InvalidTaper(format!(
                        "polynomial alpha {alpha} must exceed 2"
                    )));
                }
            }
            TaperKind::TruncatedCustom { weights } => {
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidTaper("custom weights must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Weight T_n(tau) for tau >= 0 (even extension is implicit).
    pub fn weight(&self, tau: usize) -> f64 {
        if tau >= self.horizon {
            return 0.0;
        }
        if tau == 0 {
            return 1.0;
        }
        match &self.kind {
            TaperKind::Geometric { beta } => beta.powi(tau as i32),
            TaperKind::Polynomial { alpha } => (1.0 + tau as f64).powf(-alpha),
            TaperKind::TruncatedCustom { weights } => weights.get(tau - 1).copied().unwrap_or(0.0),
        }
    }

    /// Largest lag with a nonzero weight, if any lag >= 1 contributes.
    pub fn max_active_lag(&self) -> Option<usize> {
        (1..self.horizon).rev().find(|&tau| self.weight(tau) != 0.0)
    }

    /// Upper bound on |taper_symbol| over all frequencies.
    pub fn symbol_bound(&self) -> f64 {
        1.0 + 2.0 * (1..self.horizon).map(|tau| self.weight(tau).abs()).sum::<f64>()
    }
}

/// Taper symbol 1 + 2 sum_{tau>=1} T_n(tau) cos(tau * theta), the
/// frequency-domain weight of the tapered estimator.
pub fn taper_symbol(taper: &TaperSpec, theta: f64) -> f64 {
    let mut acc = 1.0;
    for tau in 1..taper.horizon {
        let w = taper.weight(tau);
        if w != 0.0 {
            acc += 2.0 * w * (tau as f64 * theta).cos();
        }
    }
    acc
}

/// One named check in an assumption report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Diagnostic report produced by [`validate_assumptions`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Partial sum sum_{ell<=q_max} sup_atoms |f_ell|.
    pub sum_sup_f: f64,
    /// Partial sum sum_{ell<=q_max} ell * sup_atoms |f_ell|.
    pub sum_ell_sup_f: f64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the model against the standing assumptions and reports the
/// operational coefficient bounds. Diagnostic only: never errors.
pub fn validate_assumptions(model: &ProcessModel) -> AssumptionReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(AssumptionCheck {
            name: name.into(),
            passed,
            detail,
        });
    };

    let f0_ok = model
        .param_distribution
        .atoms
        .iter()
        .all(|a| model.family.tap(&a.lambda, 0).is_ok_and(|t| t == 1.0));
    push("f0_is_one", f0_ok, "f_0(lambda) = 1 on every atom".into());

    let weight_sum: f64 = model.param_distribution.atoms.iter().map(|a| a.weight).sum();
    push(
        "weights_normalized",
        (weight_sum - 1.0).abs() <= WEIGHT_SUM_TOL,
        format!("atom weights sum to {weight_sum}"),
    );

    let weights_ok = model.param_distribution.atoms.iter().all(|a| a.weight > 0.0 && a.weight <= 1.0);
    push("weights_in_range", weights_ok, "each weight in (0, 1]".into());

    let m = model.param_distribution.dim();
    let dims_ok = model.param_distribution.atoms.iter().all(|a| a.lambda.len() == m);
    push("atom_dims_consistent", dims_ok, format!("shared dimension m = {m}"));

    let causal_ok = model
        .param_distribution
        .atoms
        .iter()
        .all(|a| model.family.tap(&a.lambda, 1).is_ok());
    push("family_causal", causal_ok, "lag coefficients defined on every atom".into());

    let sum_sup_f = model.lambda_bar();
    let sum_ell_sup_f = model.lambda_bar_prime();
    push(
        "coefficient_bounds_finite",
        sum_sup_f.is_finite() && sum_ell_sup_f.is_finite(),
        format!("sum sup|f_ell| = {sum_sup_f}, sum ell*sup|f_ell| = {sum_ell_sup_f}"),
    );

    match &model.scaling {
        None => push("scaling_support", true, "no scaling (g_B = 1)".into()),
        Some(g) => {
            let nonneg = g.iter().all(|&v| v >= 0.0 && v.is_finite());
            let overlap = g
                .iter()
                .zip(&model.param_distribution.atoms)
                .any(|(&v, a)| v > 0.0 && a.weight > 0.0);
            push(
                "scaling_support",
                nonneg && overlap && g.len() == model.param_distribution.atoms.len(),
                "g_B nonnegative and positive on an atom with positive weight".into(),
            );
        }
    }

    match &model.filter {
        None => push("filter_summable", true, "no filter (b = (1))".into()),
        Some(b) => {
            let sum_k: f64 = b.iter().enumerate().map(|(k, v)| k as f64 * v.abs()).sum();
            push(
                "filter_summable",
                sum_k.is_finite(),
                format!("sum k*|b_k| = {sum_k}"),
            );
        }
    }

    AssumptionReport {
        checks,
        sum_sup_f,
        sum_ell_sup_f,
    }
}

/// Tiny FNV-1a accumulator for model and solver-system hashing.
pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x100_0000_01b3);
    }

    pub(crate) fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.byte(b);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
