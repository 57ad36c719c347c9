//! Deterministic lower-bound certificates. Both rest on the same event: the
//! sample lands entirely on class 1, an estimator is a fixed function of the
//! sample, and a nearby two-point distribution makes that event likely while
//! forcing a large loss on the estimate it provokes.

use crate::divergence::chi2;
use crate::error::{Error, Result};
use crate::estimator::{estimate, SmoothingRule};
use crate::simplex::{dirac, CountVector, Distribution};

/// Coefficient of the confidence-independent certificate threshold
/// 0.04 log^2(1/delta) / (kappa n).
pub const CONF_INDEP_CERT_COEFF: f64 = 0.04;

/// Coefficient of the minimax certificate threshold 0.15 (u + u^2) with
/// u = sqrt(d) log(1/delta) / n.
pub const MINIMAX_CERT_COEFF: f64 = 0.15;

/// Head-deficit cutoff separating the two small-deviation witnesses:
/// alpha >= log(1/delta) / (7 sqrt(d)) lets the point mass itself certify.
pub const ALPHA_CUTOFF_DIVISOR: f64 = 7.0;

/// The family of near-point-mass alternatives: member j puts 1 - rho on
/// class 1 and rho = 1 - delta^(1/n) on class j. Any member produces an
/// all-class-1 sample of size n with probability exactly delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointFamily {
    n: u64,
    d: usize,
    delta: f64,
    /// log(delta) / n; head mass is e^t, so the all-ones event has
    /// probability e^(n t) = delta with no accumulated rounding.
    t: f64,
    rho: f64,
}

pub fn build_family(n: u64, d: usize, delta: f64) -> Result<TwoPointFamily> {
    if d < 2 {
        return Err(Error::Invalid("family needs at least two classes"));
    }
    if n < d as u64 {
        return Err(Error::OutOfDomain("family is built for n >= d"));
    }
    if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
        return Err(Error::Invalid("confidence level must lie in (0, 1)"));
    }
    if delta <= (-(n as f64)).exp() || delta >= (-1.0f64).exp() {
        return Err(Error::OutOfDomain(
            "confidence level must lie in (exp(-n), exp(-1))",
        ));
    }
    let t = delta.ln() / n as f64;
    Ok(TwoPointFamily {
        n,
        d,
        delta,
        t,
        rho: -t.exp_m1(),
    })
}

impl TwoPointFamily {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mass moved off class 1: 1 - delta^(1/n).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mass kept on class 1: delta^(1/n).
    pub fn head_mass(&self) -> f64 {
        self.t.exp()
    }

    /// P(every one of n draws is class 1) = head_mass^n, evaluated as
    /// exp(n t) so it reproduces delta to the last few ulps.
    pub fn all_ones_probability(&self) -> f64 {
        (self.n as f64 * self.t).exp()
    }

    /// Member indexed by the class j >= 2 that carries rho.
    pub fn member(&self, j: usize) -> Result<Distribution> {
        if j < 2 || j > self.d {
            return Err(Error::Invalid("member index must lie in 2..=d"));
        }
        let mut probs = vec![0.0; self.d];
        probs[0] = self.head_mass();
        probs[j - 1] = self.rho;
        Distribution::new(probs)
    }
}

/// What a smoothing rule outputs when all n observations are class 1:
/// ((n + lambda) / (n + lambda d), lambda / (n + lambda d), ...), or the
/// point mass itself for the empirical rule.
pub fn all_ones_estimate(rule: &SmoothingRule, n: u64, d: usize) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::Invalid("estimate needs n >= 1"));
    }
    if d == 0 {
        return Err(Error::Invalid("dimension must be >= 1"));
    }
    let mut counts = vec![0u64; d];
    counts[0] = n;
    estimate(&CountVector::from_counts(counts), rule)
}

/// Numeric witness that a confidence-independent estimator pays
/// log^2(1/delta) / (25 kappa n) somewhere: the two-point member aimed at the
/// estimate's lightest tail class makes the all-ones sample occur with
/// probability delta while the loss on that event clears the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfIndepCertificate {
    /// Class j >= 2 minimizing the estimate's mass.
    pub witness_j: usize,
    /// Mass the witness member moves onto class j.
    pub rho: f64,
    /// Probability the certificate event fires under the witness (= delta).
    pub event_prob: f64,
    /// chi2(point mass, estimate), the expected-loss proxy the class of
    /// estimators is constrained by.
    pub assumption_value: f64,
    /// assumption_value <= kappa d / n.
    pub assumption_holds: bool,
    /// Full chi2(witness, estimate) paid on the event.
    pub loss_on_event: f64,
    /// The single witness-class contribution (rho - q_j)^2 / q_j.
    pub witness_term: f64,
    /// Its analytic relaxation rho^2 / (4 q_j), valid once q_j <= rho / 2.
    pub relaxed_term: f64,
    /// 0.04 log^2(1/delta) / (kappa n).
    pub threshold: f64,
    /// Assumption satisfied and loss_on_event >= threshold.
    pub holds: bool,
}

/// Index (1-based) of the lightest class among j >= 2, ties to the smallest.
fn lightest_tail_class(q: &Distribution) -> usize {
    let mut best = 2;
    let mut best_mass = q.probs()[1];
    for (i, &mass) in q.probs().iter().enumerate().skip(2) {
        if mass < best_mass {
            best = i + 1;
            best_mass = mass;
        }
    }
    best
}

pub fn conf_indep_certificate_for_estimate(
    q: &Distribution,
    n: u64,
    delta: f64,
    kappa: f64,
) -> Result<ConfIndepCertificate> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Invalid("expected-loss multiplier must be positive"));
    }
    let family = build_family(n, q.dim(), delta)?;
    let d = q.dim();
    let witness_j = lightest_tail_class(q);
    let qj = q.probs()[witness_j - 1];
    let rho = family.rho();

    let assumption_value = chi2(&dirac(1, d)?, q)?;
    let assumption_holds = assumption_value <= kappa * d as f64 / n as f64;

    let witness = family.member(witness_j)?;
    let loss_on_event = chi2(&witness, q)?;
    let witness_term = if qj > 0.0 {
        (rho - qj) * (rho - qj) / qj
    } else {
        f64::INFINITY
    };
    let relaxed_term = if qj > 0.0 {
        rho * rho / (4.0 * qj)
    } else {
        f64::INFINITY
    };

    let log_inv = delta.recip().ln();
    let threshold = CONF_INDEP_CERT_COEFF * log_inv * log_inv / (kappa * n as f64);

    Ok(ConfIndepCertificate {
        witness_j,
        rho,
        event_prob: family.all_ones_probability(),
        assumption_value,
        assumption_holds,
        loss_on_event,
        witness_term,
        relaxed_term,
        threshold,
        holds: assumption_holds && loss_on_event >= threshold,
    })
}

pub fn conf_indep_certificate(
    rule: &SmoothingRule,
    n: u64,
    d: usize,
    delta: f64,
    kappa: f64,
) -> Result<ConfIndepCertificate> {
    conf_indep_certificate_for_estimate(&all_ones_estimate(rule, n, d)?, n, delta, kappa)
}

/// Which witness the minimax certificate deploys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossRegime {
    /// Small deviations, estimate hedges away from class 1: the point mass
    /// itself already loses enough, and the event is sure.
    LargeAlpha,
    /// Small deviations, estimate hugs the point mass: a two-point member
    /// punishes the lightest tail class.
    SmallAlpha,
    /// sqrt(d) log(1/delta) / n >= 1: the two-point member carries enough
    /// mass to punish any estimate.
    LargeDeviation,
}

/// Numeric witness that no estimator beats the minimax level: some member of
/// the family (chosen from the estimate itself) loses at least
/// 0.15 (u + u^2) with probability >= delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxCertificate {
    pub regime: LossRegime,
    /// Witness class; 1 means the point mass itself is the witness.
    pub witness_j: usize,
    /// Head deficit n (1 - q_1) / d driving the small-deviation split.
    pub alpha: f64,
    /// sqrt(d) log(1/delta) / n.
    pub u: f64,
    /// Probability of the certificate event under the witness: 1 for the
    /// point mass, delta for two-point members.
    pub event_prob: f64,
    pub loss_on_event: f64,
    pub threshold: f64,
    pub holds: bool,
}

pub fn minimax_certificate_for_estimate(
    q: &Distribution,
    n: u64,
    delta: f64,
) -> Result<MinimaxCertificate> {
    let family = build_family(n, q.dim(), delta)?;
    let d = q.dim();
    let (nf, df) = (n as f64, d as f64);
    let log_inv = delta.recip().ln();
    let u = df.sqrt() * log_inv / nf;
    let threshold = MINIMAX_CERT_COEFF * (u + u * u);
    let alpha = nf * (1.0 - q.probs()[0]) / df;
    let tail_j = lightest_tail_class(q);

    let (regime, witness_j, event_prob, loss_on_event) = if u < 1.0 {
        if alpha >= log_inv / (ALPHA_CUTOFF_DIVISOR * df.sqrt()) {
            (LossRegime::LargeAlpha, 1, 1.0, chi2(&dirac(1, d)?, q)?)
        } else {
            (
                LossRegime::SmallAlpha,
                tail_j,
                family.all_ones_probability(),
                chi2(&family.member(tail_j)?, q)?,
            )
        }
    } else {
        (
            LossRegime::LargeDeviation,
            tail_j,
            family.all_ones_probability(),
            chi2(&family.member(tail_j)?, q)?,
        )
    };

    Ok(MinimaxCertificate {
        regime,
        witness_j,
        alpha,
        u,
        event_prob,
        loss_on_event,
        threshold,
        holds: loss_on_event >= threshold,
    })
}

pub fn minimax_certificate(
    rule: &SmoothingRule,
    n: u64,
    d: usize,
    delta: f64,
) -> Result<MinimaxCertificate> {
    minimax_certificate_for_estimate(&all_ones_estimate(rule, n, d)?, n, delta)
}
