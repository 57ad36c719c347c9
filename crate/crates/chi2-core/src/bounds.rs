//! Loss thresholds: the guaranteed high-probability levels for the smoothed
//! estimators, the matching lower-bound levels, the residual-term levels the
//! Monte Carlo harness audits, and reference baselines to compare against.

use std::fmt;

use crate::error::{Error, Result};

/// Coefficient of the add-one tail threshold (d + log^2(1/delta)) / n.
pub const LAPLACE_UPPER_COEFF: f64 = 25_900.0;

/// Coefficient of the confidence-dependent tail threshold.
pub const CONF_DEP_UPPER_COEFF: f64 = 91_190.0;

/// Denominator of the confidence-independent lower threshold
/// log^2(1/delta) / (10000 kappa n).
pub const CONF_INDEP_LOWER_DENOM: f64 = 10_000.0;

/// Denominator of the minimax lower threshold.
pub const MINIMAX_LOWER_DENOM: f64 = 5_000.0;

/// Coefficient of the add-one residual-sum threshold.
pub const RESIDUAL_COEFF: f64 = 33_550.0;

/// The ten threshold families the harness knows how to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdFamily {
    /// Add-one smoothing stays below 25900 (d + log^2(1/delta)) / n
    /// except with probability 4 delta.
    LaplaceUpper,
    /// Confidence-dependent smoothing stays below
    /// 91190 (d/n + sqrt(d) log(1/delta)/n + d log^2(1/delta)/n^2)
    /// except with probability 4 delta.
    ConfDepUpper,
    /// Every confidence-independent estimator with kappa d / n expected loss
    /// exceeds log^2(1/delta) / (10000 kappa n) with probability >= delta.
    ConfIndepLower,
    /// Every estimator exceeds
    /// ((d + sqrt(d) log(1/delta))/n + d log^2(1/delta)/n^2) / 5000
    /// with probability >= delta.
    MinimaxLower,
    /// The add-one residual sum stays below 33550 (d + log^2(1/delta)) / n
    /// except with probability 2 delta.
    ResidualLaplace,
    /// The confidence-dependent residual sum stays below
    /// 91190 sqrt(d) log(1/delta) / n except with probability 2 delta.
    ResidualConfDep,
    /// Markov on the expected loss: d / (n delta).
    Markov,
    /// Earlier uniform-deviation analyses: d log(d/delta) / n.
    PriorArt,
    /// Asymptotic chi-square quantile scaling: (2d + 2 log(1/delta)) / n.
    Asymptotic,
    /// Worst-case add-one loss: 2n + 1, never exceeded when n >= d.
    Deterministic,
}

impl ThresholdFamily {
    pub const ALL: [Self; 10] = [
        Self::LaplaceUpper,
        Self::ConfDepUpper,
        Self::ConfIndepLower,
        Self::MinimaxLower,
        Self::ResidualLaplace,
        Self::ResidualConfDep,
        Self::Markov,
        Self::PriorArt,
        Self::Asymptotic,
        Self::Deterministic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LaplaceUpper => "laplace-upper",
            Self::ConfDepUpper => "conf-dep-upper",
            Self::ConfIndepLower => "conf-indep-lower",
            Self::MinimaxLower => "minimax-lower",
            Self::ResidualLaplace => "residual-laplace",
            Self::ResidualConfDep => "residual-conf-dep",
            Self::Markov => "markov",
            Self::PriorArt => "prior-art",
            Self::Asymptotic => "asymptotic",
            Self::Deterministic => "deterministic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name() == name)
            .ok_or(Error::Invalid("unknown threshold family name"))
    }
}

impl fmt::Display for ThresholdFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the guarantee caps the probability of exceeding the value (Upper)
/// or promises the value is exceeded often enough (Lower).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilitySide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub family: ThresholdFamily,
    pub n: u64,
    pub d: usize,
    pub delta: f64,
    /// Expected-loss budget multiplier; only the confidence-independent
    /// lower threshold reads it.
    pub kappa: f64,
}

impl ThresholdSpec {
    pub fn new(family: ThresholdFamily, n: u64, d: usize, delta: f64) -> Self {
        Self {
            family,
            n,
            d,
            delta,
            kappa: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdValue {
    pub value: f64,
    /// False when (n, d, delta) sit outside the range the guarantee was
    /// stated for; the value is still computed.
    pub in_domain: bool,
    pub probability_side: ProbabilitySide,
    /// The guarantee bounds the exceedance (or attainment) probability by
    /// multiplier * delta; 0 marks a sure bound.
    pub multiplier: f64,
}

fn validate(spec: &ThresholdSpec) -> Result<()> {
    if spec.n == 0 {
        return Err(Error::Invalid("sample size must be >= 1"));
    }
    if spec.d == 0 {
        return Err(Error::Invalid("dimension must be >= 1"));
    }
    if !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(Error::Invalid("confidence level must lie in (0, 1)"));
    }
    if !(spec.kappa > 0.0) || !spec.kappa.is_finite() {
        return Err(Error::Invalid("expected-loss multiplier must be positive"));
    }
    Ok(())
}

/// delta in (exp(-n/6), exp(-2)), the range shared by both upper guarantees.
fn upper_delta_window(n: u64, delta: f64) -> bool {
    delta > (-(n as f64) / 6.0).exp() && delta < (-2.0f64).exp()
}

pub fn threshold(spec: &ThresholdSpec) -> Result<ThresholdValue> {
    validate(spec)?;
    let n = spec.n as f64;
    let d = spec.d as f64;
    let log_inv = spec.delta.recip().ln();

    let (value, in_domain, probability_side, multiplier) = match spec.family {
        ThresholdFamily::LaplaceUpper => (
            LAPLACE_UPPER_COEFF * (d + log_inv * log_inv) / n,
            spec.n >= 12 && spec.d >= 2 && upper_delta_window(spec.n, spec.delta),
            ProbabilitySide::Upper,
            4.0,
        ),
        ThresholdFamily::ConfDepUpper => (
            CONF_DEP_UPPER_COEFF
                * (d / n + d.sqrt() * log_inv / n + d * log_inv * log_inv / (n * n)),
            spec.n >= 12 && spec.d >= 2 && upper_delta_window(spec.n, spec.delta),
            ProbabilitySide::Upper,
            4.0,
        ),
        ThresholdFamily::ConfIndepLower => (
            log_inv * log_inv / (CONF_INDEP_LOWER_DENOM * spec.kappa * n),
            spec.d >= 4000
                && spec.n >= spec.d as u64
                && spec.delta > (-n).exp()
                && spec.delta < (-6.32 * spec.kappa).exp(),
            ProbabilitySide::Lower,
            1.0,
        ),
        ThresholdFamily::MinimaxLower => (
            ((d + d.sqrt() * log_inv) / n + d * log_inv * log_inv / (n * n)) / MINIMAX_LOWER_DENOM,
            spec.d >= 5000
                && spec.n >= spec.d as u64
                && spec.delta > (-n).exp()
                && spec.delta < (-1.0f64).exp(),
            ProbabilitySide::Lower,
            1.0,
        ),
        ThresholdFamily::ResidualLaplace => (
            RESIDUAL_COEFF * (d + log_inv * log_inv) / n,
            upper_delta_window(spec.n, spec.delta),
            ProbabilitySide::Upper,
            2.0,
        ),
        ThresholdFamily::ResidualConfDep => (
            CONF_DEP_UPPER_COEFF * d.sqrt() * log_inv / n,
            spec.delta > (-(n) / 6.0).exp() && spec.delta <= (-d.sqrt()).exp(),
            ProbabilitySide::Upper,
            2.0,
        ),
        ThresholdFamily::Markov => (d / (n * spec.delta), true, ProbabilitySide::Upper, 1.0),
        ThresholdFamily::PriorArt => (
            d * (d / spec.delta).ln() / n,
            true,
            ProbabilitySide::Upper,
            1.0,
        ),
        ThresholdFamily::Asymptotic => (
            (2.0 * d + 2.0 * log_inv) / n,
            true,
            ProbabilitySide::Upper,
            1.0,
        ),
        ThresholdFamily::Deterministic => (
            2.0 * n + 1.0,
            spec.n >= spec.d as u64,
            ProbabilitySide::Upper,
            0.0,
        ),
    };

    Ok(ThresholdValue {
        value,
        in_domain,
        probability_side,
        multiplier,
    })
}

/// Every family at the same (n, d, delta, kappa), ascending by value.
pub fn compare_thresholds(
    n: u64,
    d: usize,
    delta: f64,
    kappa: f64,
) -> Result<Vec<(ThresholdFamily, ThresholdValue)>> {
    let mut rows = Vec::with_capacity(ThresholdFamily::ALL.len());
    for family in ThresholdFamily::ALL {
        let spec = ThresholdSpec::new(family, n, d, delta).with_kappa(kappa);
        rows.push((family, threshold(&spec)?));
    }
    rows.sort_by(|a, b| a.1.value.total_cmp(&b.1.value));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval(family: ThresholdFamily, n: u64, d: usize, delta: f64) -> ThresholdValue {
        threshold(&ThresholdSpec::new(family, n, d, delta)).unwrap()
    }

    #[test]
    fn baseline_values() {
        assert_relative_eq!(
            eval(ThresholdFamily::Markov, 1000, 10, 0.01).value,
            1.0,
            max_relative = 1e-14
        );
        let asym = eval(ThresholdFamily::Asymptotic, 1000, 10, (-3.0f64).exp());
        assert_relative_eq!(asym.value, 0.026, max_relative = 1e-14);
        let prior = eval(ThresholdFamily::PriorArt, 1000, 10, 0.01);
        assert_relative_eq!(
            prior.value,
            10.0 * 1000.0f64.ln() / 1000.0,
            max_relative = 1e-14
        );
        assert_eq!(
            eval(ThresholdFamily::Deterministic, 100, 10, 0.5).value,
            201.0
        );
    }

    #[test]
    fn guarantee_values() {
        let delta = (-3.0f64).exp();
        let lap = eval(ThresholdFamily::LaplaceUpper, 1000, 10, delta);
        assert_relative_eq!(lap.value, 25_900.0 * 19.0 / 1000.0, max_relative = 1e-14);
        assert!(lap.in_domain);
        assert_eq!(lap.multiplier, 4.0);

        let conf = eval(ThresholdFamily::ConfDepUpper, 1000, 10, delta);
        let expected = 91_190.0 * (0.01 + 10.0f64.sqrt() * 3.0 / 1000.0 + 9e-5);
        assert_relative_eq!(conf.value, expected, max_relative = 1e-13);

        let res = eval(ThresholdFamily::ResidualLaplace, 1000, 10, delta);
        assert_relative_eq!(res.value, 33_550.0 * 19.0 / 1000.0, max_relative = 1e-14);
        assert_eq!(res.multiplier, 2.0);

        let res_cd = eval(ThresholdFamily::ResidualConfDep, 1000, 16, (-5.0f64).exp());
        assert_relative_eq!(
            res_cd.value,
            91_190.0 * 4.0 * 5.0 / 1000.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lower_threshold_values() {
        let lower = eval(ThresholdFamily::ConfIndepLower, 4000, 4000, (-8.0f64).exp());
        assert_relative_eq!(lower.value, 64.0 / 40_000_000.0, max_relative = 1e-14);
        assert!(lower.in_domain);
        assert_eq!(lower.probability_side, ProbabilitySide::Lower);

        // Doubling the expected-loss budget halves the guaranteed level.
        let relaxed = threshold(
            &ThresholdSpec::new(ThresholdFamily::ConfIndepLower, 4000, 4000, (-8.0f64).exp())
                .with_kappa(2.0),
        )
        .unwrap();
        assert_relative_eq!(relaxed.value, lower.value / 2.0, max_relative = 1e-14);

        let minimax = eval(ThresholdFamily::MinimaxLower, 5000, 5000, (-1.5f64).exp());
        let expected =
            ((5000.0 + 5000.0f64.sqrt() * 1.5) / 5000.0 + 5000.0 * 2.25 / 25_000_000.0) / 5000.0;
        assert_relative_eq!(minimax.value, expected, max_relative = 1e-13);
        assert!(minimax.in_domain);
    }

    #[test]
    fn domain_flags() {
        // Upper guarantees need delta < e^-2.
        assert!(!eval(ThresholdFamily::LaplaceUpper, 1000, 10, 0.5).in_domain);
        assert!(!eval(ThresholdFamily::LaplaceUpper, 1000, 10, (-2.0f64).exp()).in_domain);
        // ... and delta > e^-(n/6).
        assert!(!eval(ThresholdFamily::LaplaceUpper, 12, 10, (-3.0f64).exp()).in_domain);
        assert!(eval(ThresholdFamily::LaplaceUpper, 60, 10, (-3.0f64).exp()).in_domain);
        // Small n or d also leave the stated range.
        assert!(!eval(ThresholdFamily::LaplaceUpper, 11, 10, (-2.5f64).exp()).in_domain);
        assert!(!eval(ThresholdFamily::LaplaceUpper, 1000, 1, (-3.0f64).exp()).in_domain);

        // Confidence-dependent residual window is closed at delta = e^-sqrt(d).
        assert!(eval(ThresholdFamily::ResidualConfDep, 1000, 16, (-4.0f64).exp()).in_domain);
        assert!(!eval(ThresholdFamily::ResidualConfDep, 1000, 16, (-3.9f64).exp()).in_domain);

        // Lower guarantees need large alphabets.
        assert!(!eval(ThresholdFamily::ConfIndepLower, 1000, 10, (-8.0f64).exp()).in_domain);
        assert!(!eval(ThresholdFamily::MinimaxLower, 4999, 4999, (-1.5f64).exp()).in_domain);
        assert!(!eval(ThresholdFamily::MinimaxLower, 5000, 5000, 0.5).in_domain);

        // Sure bound only covers n >= d.
        assert!(!eval(ThresholdFamily::Deterministic, 10, 50, 0.5).in_domain);
        assert!(eval(ThresholdFamily::Deterministic, 50, 50, 0.5).in_domain);

        // Out-of-domain values are still computed.
        let out = eval(ThresholdFamily::LaplaceUpper, 1000, 10, 0.5);
        assert!(out.value.is_finite() && out.value > 0.0);
    }

    #[test]
    fn structural_errors() {
        let bad = ThresholdSpec::new(ThresholdFamily::Markov, 0, 10, 0.1);
        assert!(threshold(&bad).is_err());
        let bad = ThresholdSpec::new(ThresholdFamily::Markov, 10, 0, 0.1);
        assert!(threshold(&bad).is_err());
        for delta in [0.0, 1.0, -0.5, f64::NAN] {
            let bad = ThresholdSpec::new(ThresholdFamily::Markov, 10, 2, delta);
            assert!(threshold(&bad).is_err());
        }
        let bad = ThresholdSpec::new(ThresholdFamily::Markov, 10, 2, 0.1).with_kappa(0.0);
        assert!(threshold(&bad).is_err());
    }

    #[test]
    fn comparison_is_sorted_and_complete() {
        let rows = compare_thresholds(1000, 10, (-3.0f64).exp(), 1.0).unwrap();
        assert_eq!(rows.len(), 10);
        for pair in rows.windows(2) {
            assert!(pair[0].1.value <= pair[1].1.value);
        }
        // The lower-bound levels sit below every baseline here.
        assert_eq!(rows[0].0, ThresholdFamily::ConfIndepLower);
    }

    #[test]
    fn family_names_round_trip() {
        for family in ThresholdFamily::ALL {
            assert_eq!(ThresholdFamily::from_name(family.name()).unwrap(), family);
        }
        assert!(ThresholdFamily::from_name("no-such-family").is_err());
    }
}
