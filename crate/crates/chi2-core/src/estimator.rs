//! Estimators built from per-class counts: the raw empirical frequencies and
//! the add-lambda smoothing family, with lambda either fixed or tied to a
//! target confidence level.

use crate::error::{Error, Result};
use crate::simplex::{CountVector, Distribution};

/// How the pseudo-count lambda is chosen.
///
/// `ConfidenceDependent(delta)` resolves to max{1, log(1/delta)/sqrt(d)}.
/// The resolved lambda may exceed n/d: the large-deviation regime relies on
/// lambda*d >= n, so no cap is imposed here. Auditors that need a restricted
/// lambda range enforce it themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingRule {
    Empirical,
    Fixed(f64),
    ConfidenceDependent(f64),
}

impl SmoothingRule {
    pub fn is_smoothed(&self) -> bool {
        !matches!(self, SmoothingRule::Empirical)
    }
}

/// Pseudo-count for a smoothed rule in dimension d.
pub fn resolve_lambda(rule: &SmoothingRule, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Invalid("dimension must be positive"));
    }
    match *rule {
        SmoothingRule::Empirical => Err(Error::Invalid("empirical rule has no pseudo-count")),
        SmoothingRule::Fixed(lambda) => {
            if lambda.is_finite() && lambda > 0.0 {
                Ok(lambda)
            } else {
                Err(Error::Invalid("fixed pseudo-count must be positive"))
            }
        }
        SmoothingRule::ConfidenceDependent(delta) => {
            if delta > 0.0 && delta < 1.0 {
                Ok((delta.recip().ln() / (d as f64).sqrt()).max(1.0))
            } else {
                Err(Error::Invalid("confidence level must lie in (0, 1)"))
            }
        }
    }
}

/// Estimated distribution: N_j/n for Empirical, (N_j + lambda)/(n + lambda*d)
/// otherwise.
pub fn estimate(counts: &CountVector, rule: &SmoothingRule) -> Result<Distribution> {
    let d = counts.dim();
    let n = counts.n() as f64;
    let probs: Vec<f64> = match rule {
        SmoothingRule::Empirical => {
            if counts.n() == 0 {
                return Err(Error::Invalid("empirical estimate needs n >= 1"));
            }
            counts.counts().iter().map(|&c| c as f64 / n).collect()
        }
        _ => {
            let lambda = resolve_lambda(rule, d)?;
            let denom = n + lambda * d as f64;
            counts
                .counts()
                .iter()
                .map(|&c| (c as f64 + lambda) / denom)
                .collect()
        }
    };
    Distribution::new(probs)
}

/// Guaranteed lower bound on every estimated coordinate: lambda/(n + lambda*d)
/// for smoothed rules, zero for the empirical one.
pub fn min_mass(rule: &SmoothingRule, n: u64, d: usize) -> Result<f64> {
    match rule {
        SmoothingRule::Empirical => Ok(0.0),
        _ => {
            let lambda = resolve_lambda(rule, d)?;
            Ok(lambda / (n as f64 + lambda * d as f64))
        }
    }
}
