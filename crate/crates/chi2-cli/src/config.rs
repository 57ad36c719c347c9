//! JSON experiment configs: one flat object per experiment, strict fields.

use crate::{CliError, CliResult};
use chi2_core::{
    build_family, dirac, make_distribution, Distribution, SmoothingRule, ThresholdFamily,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::Path;

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "id {id:?} must be nonempty and use only [a-zA-Z0-9_-]"
        )))
    }
}

fn check_delta(delta: f64) -> CliResult<()> {
    if delta.is_finite() && delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Equal mass on every class.
    Uniform,
    /// All mass on one class (1-based).
    Dirac { class: usize },
    /// Mass rho on `class`, the rest on class 1.
    TwoPoint {
        rho: f64,
        #[serde(default = "default_tail_class")]
        class: usize,
    },
    /// Mass proportional to class^(-exponent).
    PowerLaw { exponent: f64 },
    /// Explicit weights, normalized to sum 1; length must equal d.
    Explicit { probs: Vec<f64> },
    /// Member of the two-point adversarial family at the row's (n, d, delta).
    Adversarial { class: usize },
}

fn default_tail_class() -> usize {
    2
}

impl DistributionSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Uniform => "uniform".to_string(),
            Self::Dirac { class } => format!("dirac({class})"),
            Self::TwoPoint { rho, class } => format!("two-point({rho};{class})"),
            Self::PowerLaw { exponent } => format!("power-law({exponent})"),
            Self::Explicit { probs } => format!("explicit[{}]", probs.len()),
            Self::Adversarial { class } => format!("adversarial({class})"),
        }
    }

    /// Builds the distribution for one grid point. `delta` is only needed for
    /// the adversarial family, whose members depend on (n, delta).
    pub fn resolve(&self, d: usize, n: u64, delta: Option<f64>) -> CliResult<Distribution> {
        if d == 0 {
            return Err(CliError::Config("d must be >= 1".to_string()));
        }
        match self {
            Self::Uniform => Ok(Distribution::uniform(d)?),
            Self::Dirac { class } => Ok(dirac(*class, d)?),
            Self::TwoPoint { rho, class } => {
                if !(rho.is_finite() && *rho > 0.0 && *rho < 1.0) {
                    return Err(CliError::Config(format!(
                        "two-point rho must lie in (0, 1), got {rho}"
                    )));
                }
                if *class < 2 || *class > d {
                    return Err(CliError::Config(format!(
                        "two-point class must lie in 2..=d, got {class} with d = {d}"
                    )));
                }
                let mut weights = vec![0.0; d];
                weights[0] = 1.0 - rho;
                weights[class - 1] = *rho;
                Ok(make_distribution(&weights)?)
            }
            Self::PowerLaw { exponent } => {
                if !exponent.is_finite() {
                    return Err(CliError::Config("power-law exponent must be finite".into()));
                }
                let weights: Vec<f64> = (1..=d).map(|j| (j as f64).powf(-exponent)).collect();
                Ok(make_distribution(&weights)?)
            }
            Self::Explicit { probs } => {
                if probs.len() != d {
                    return Err(CliError::Config(format!(
                        "explicit probs has length {}, expected d = {d}",
                        probs.len()
                    )));
                }
                Ok(make_distribution(probs)?)
            }
            Self::Adversarial { class } => {
                let delta = delta.ok_or_else(|| {
                    CliError::Config(
                        "adversarial distributions need a delta grid to resolve against".into(),
                    )
                })?;
                Ok(build_family(n, d, delta)?.member(*class)?)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Empirical,
    Fixed { lambda: f64 },
    ConfidenceDependent,
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Empirical => "empirical".to_string(),
            Self::Fixed { lambda } => format!("fixed({lambda})"),
            Self::ConfidenceDependent => "confidence-dependent".to_string(),
        }
    }

    pub fn rule(&self, delta: f64) -> SmoothingRule {
        match self {
            Self::Empirical => SmoothingRule::Empirical,
            Self::Fixed { lambda } => SmoothingRule::Fixed(*lambda),
            Self::ConfidenceDependent => SmoothingRule::ConfidenceDependent(delta),
        }
    }

    /// Tail guarantee this rule is meant to satisfy, if any.
    pub fn matched_family(&self) -> Option<ThresholdFamily> {
        match self {
            Self::Empirical => None,
            Self::Fixed { lambda } if (*lambda - 1.0).abs() <= 1e-12 => {
                Some(ThresholdFamily::LaplaceUpper)
            }
            Self::Fixed { .. } => None,
            Self::ConfidenceDependent => Some(ThresholdFamily::ConfDepUpper),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Self::Fixed { lambda } = self {
            if !(lambda.is_finite() && *lambda > 0.0) {
                return Err(CliError::Config(format!(
                    "fixed smoothing weight must be positive, got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

fn default_true() -> bool {
    true
}

fn default_confidence() -> f64 {
    chi2_core::DEFAULT_CI_CONFIDENCE
}

fn default_kappa() -> f64 {
    1.0
}

fn family_names() -> String {
    ThresholdFamily::ALL
        .iter()
        .map(|f| f.name())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailRiskConfig {
    pub id: String,
    pub d: usize,
    pub n_grid: Vec<u64>,
    pub delta_grid: Vec<f64>,
    pub estimator: EstimatorSpec,
    pub distribution: DistributionSpec,
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Threshold families drawn as reference lines and tabulated; the
    /// estimator's own guarantee is always added.
    #[serde(default)]
    pub reference_families: Option<Vec<String>>,
    #[serde(default = "default_true")]
    pub assert_bounds: bool,
}

impl TailRiskConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_id(&self.id)?;
        self.estimator.validate()?;
        if self.d == 0 {
            return Err(CliError::Config("d must be >= 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(CliError::Config("n_grid must be nonempty".into()));
        }
        if self.delta_grid.is_empty() {
            return Err(CliError::Config("delta_grid must be nonempty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(CliError::Config("every n must be >= 1".into()));
        }
        for &delta in &self.delta_grid {
            check_delta(delta)?;
        }
        if self.replications == 0 {
            return Err(CliError::Config("replications must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CliError::Config("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Reference families plus the estimator's matched guarantee, deduplicated
    /// in listed order.
    pub fn resolved_families(&self) -> CliResult<Vec<ThresholdFamily>> {
        let mut families = Vec::new();
        let defaults = [
            ThresholdFamily::Asymptotic,
            ThresholdFamily::Markov,
            ThresholdFamily::PriorArt,
            ThresholdFamily::LaplaceUpper,
            ThresholdFamily::ConfDepUpper,
        ];
        match &self.reference_families {
            None => families.extend(defaults),
            Some(names) => {
                for name in names {
                    let family = ThresholdFamily::from_name(name).map_err(|_| {
                        CliError::Config(format!(
                            "unknown threshold family {name:?}; valid families: {}",
                            family_names()
                        ))
                    })?;
                    families.push(family);
                }
            }
        }
        if let Some(matched) = self.estimator.matched_family() {
            if !families.contains(&matched) {
                families.push(matched);
            }
        }
        if families.is_empty() {
            return Err(CliError::Config("no threshold families to evaluate".into()));
        }
        Ok(families)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationCase {
    pub d: usize,
    pub n: u64,
    pub distribution: DistributionSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationConfig {
    pub id: String,
    pub cases: Vec<ExpectationCase>,
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub assert_bounds: bool,
}

impl ExpectationConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_id(&self.id)?;
        if self.cases.is_empty() {
            return Err(CliError::Config("cases must be nonempty".into()));
        }
        for case in &self.cases {
            if case.d == 0 || case.n == 0 {
                return Err(CliError::Config(
                    "every case needs d >= 1 and n >= 1".into(),
                ));
            }
        }
        if self.replications < 2 {
            return Err(CliError::Config(
                "replications must be >= 2 to estimate a standard error".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    ConfidenceIndependent,
    Minimax,
}

impl CertificateKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ConfidenceIndependent => "confidence-independent",
            Self::Minimax => "minimax",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub id: String,
    pub certificate: CertificateKind,
    pub estimator: EstimatorSpec,
    pub n_grid: Vec<u64>,
    pub d_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_true")]
    pub assert_bounds: bool,
}

impl LowerBoundConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_id(&self.id)?;
        self.estimator.validate()?;
        if self.n_grid.is_empty() || self.d_grid.is_empty() || self.delta_grid.is_empty() {
            return Err(CliError::Config(
                "n_grid, d_grid, and delta_grid must be nonempty".into(),
            ));
        }
        for &delta in &self.delta_grid {
            check_delta(delta)?;
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(CliError::Config(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

fn default_audit_n() -> u64 {
    1000
}

fn default_audit_d() -> usize {
    10
}

fn default_audit_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub id: String,
    pub audits: Vec<String>,
    pub trials: u64,
    #[serde(default = "default_audit_n")]
    pub n: u64,
    #[serde(default = "default_audit_d")]
    pub d: usize,
    #[serde(default = "default_audit_delta")]
    pub delta: f64,
    /// Source distribution for sampled audits; uniform when omitted.
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    /// Smoothing-weight grid for the heavy-smoothing audits; sensible
    /// defaults scaled by n/d when omitted.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub assert_bounds: bool,
}

impl AuditConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_id(&self.id)?;
        if self.audits.is_empty() {
            return Err(CliError::Config("audits must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be >= 1".into()));
        }
        if self.n == 0 || self.d == 0 {
            return Err(CliError::Config("n and d must be >= 1".into()));
        }
        check_delta(self.delta)?;
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
                return Err(CliError::Config(
                    "lambda_grid must be nonempty and strictly positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub n: u64,
    pub d: usize,
    pub delta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}
