//! Closed-form quantities: the exact add-one chi-square risk in expectation,
//! the binomial reciprocal-moment identity behind it, Poisson lower-tail
//! evaluation with its analytic bounds, and the heavy-tailed envelope
//! distribution that dominates each residual summand.

use rand::prelude::*;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::simplex::{Distribution, RngSeed};
use crate::sum::compensated_sum;

/// Scale of the envelope tail law P(W >= t^2) = exp(-t/14).
pub const ENVELOPE_SCALE: f64 = 14.0;

/// Stated coefficient of the p-th envelope norm bound 2270 p^2 / lambda.
pub const ENVELOPE_MOMENT_COEFF: f64 = 2270.0;

/// (1 - p)^m computed without cancellation for small p.
fn pow_one_minus(p: f64, m: f64) -> f64 {
    if p < 0.5 {
        (m * (-p).ln_1p()).exp()
    } else {
        (1.0 - p).powf(m)
    }
}

/// E[1/(N+1)] for N ~ Bin(n, p): (1 - (1-p)^(n+1)) / ((n+1) p), extended by
/// continuity to 1 at p = 0.
pub fn expected_inverse_count_plus_one(n: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("reciprocal moment needs n >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invalid("success probability must lie in [0, 1]"));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    let m = (n + 1) as f64;
    // 1 - (1-p)^m = -expm1(m log1p(-p)), stable for all p in (0, 1].
    let numerator = -(m * (-p).ln_1p()).exp_m1();
    Ok(numerator / (m * p))
}

/// Exact E[chi2(P, add-one estimate)] for a sample of size n:
/// (d-1)/(n+1) - ((n+d)/(n+1)) * sum_j p_j (1-p_j)^(n+1).
/// Always <= (d-1)/(n+1) <= d/n.
pub fn exact_laplace_chi2_expectation(p: &Distribution, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("expectation needs n >= 1"));
    }
    let d = p.dim() as f64;
    let m = (n + 1) as f64;
    let tail_sum = compensated_sum(p.probs().iter().map(|&pj| pj * pow_one_minus(pj, m)));
    Ok((d - 1.0) / m - ((n as f64 + d) / m) * tail_sum)
}

/// Exact P(Poisson(mean) <= k) by the pmf recurrence, entering linear space
/// only once terms are representable (means beyond ~700 underflow exp(-mean)).
/// Capped at 1; terms past the mode are dropped once they stop contributing.
pub fn poisson_lower_tail(mean: f64, k: u64) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Invalid("poisson mean must be positive"));
    }
    let mut cum = 0.0f64;
    let mut ln_pmf = -mean;
    let mut linear = ln_pmf > -700.0;
    let mut pmf = if linear { ln_pmf.exp() } else { 0.0 };
    if linear {
        cum = pmf;
    }
    for i in 1..=k {
        let i_f = i as f64;
        if linear {
            pmf *= mean / i_f;
            cum += pmf;
            if i_f > mean && pmf < cum * 1e-18 {
                break;
            }
        } else {
            ln_pmf += (mean / i_f).ln();
            if ln_pmf > -700.0 {
                pmf = ln_pmf.exp();
                cum += pmf;
                linear = true;
            }
        }
    }
    Ok(cum.min(1.0))
}

/// Exact P(Poisson(lambda_j/2) <= floor(lambda_j/4)): the probability that a
/// Poissonized count falls to a quarter of its class mean.
pub fn poisson_quarter_tail_exact(lambda_j: f64) -> Result<f64> {
    if !(lambda_j > 0.0) || !lambda_j.is_finite() {
        return Err(Error::Invalid("class mean must be positive"));
    }
    poisson_lower_tail(lambda_j / 2.0, (lambda_j / 4.0).floor() as u64)
}

/// Chernoff bound on the quarter tail: exp(-(1 - log 2) lambda_j / 4).
pub fn poisson_quarter_tail_chernoff(lambda_j: f64) -> f64 {
    (-(1.0 - std::f64::consts::LN_2) * lambda_j / 4.0).exp()
}

/// Relaxation of the Chernoff bound to the envelope rate: exp(-lambda_j/14).
pub fn poisson_quarter_tail_envelope(lambda_j: f64) -> f64 {
    (-lambda_j / ENVELOPE_SCALE).exp()
}

/// The envelope variable W^(lambda) = W/lambda with P(W >= t^2) = exp(-t/14):
/// a heavy-tailed law that stochastically dominates every residual summand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeW {
    lambda: f64,
}

impl EnvelopeW {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid("envelope scaling divisor must be positive"));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// P(W^(lambda) >= w): 1 for w <= 0, exp(-sqrt(lambda w)/14) beyond.
pub fn envelope_tail(env: &EnvelopeW, w: f64) -> f64 {
    if w <= 0.0 {
        1.0
    } else {
        (-(env.lambda * w).sqrt() / ENVELOPE_SCALE).exp()
    }
}

/// One draw of W^(lambda): (14 E)^2 / lambda with E a unit-rate exponential.
pub fn sample_envelope(env: &EnvelopeW, seed: RngSeed) -> f64 {
    sample_envelope_with(env, &mut seed.rng())
}

/// Same draw fed from a caller-managed generator (for replication loops).
pub fn sample_envelope_with<R: Rng + ?Sized>(env: &EnvelopeW, rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    let t = ENVELOPE_SCALE * e;
    t * t / env.lambda
}

/// Exact E[W^p] = 2p * 14^(2p) * (2p - 1)! for integer p >= 1 (the tail
/// integral evaluates to a Gamma function; the displayed (2p)^(2p) variant is
/// an upper bound, not the integral's value).
pub fn envelope_moment_exact(p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::Invalid("moment order must be >= 1"));
    }
    let mut gamma_2p = 1.0f64; // (2p - 1)!
    for i in 2..(2 * p) {
        gamma_2p *= i as f64;
    }
    Ok(2.0 * p as f64 * ENVELOPE_SCALE.powi(2 * p as i32) * gamma_2p)
}

/// Stated bound on ||W^(lambda)||_p: 2270 p^2 / lambda.
pub fn envelope_moment_bound(p: f64, lambda: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Invalid("moment order must be >= 1"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid("envelope scaling divisor must be positive"));
    }
    Ok(ENVELOPE_MOMENT_COEFF * p * p / lambda)
}

/// ||W^(lambda)||_p = (E[W^p])^(1/p) / lambda for integer p.
pub fn envelope_lp_norm(p: u32, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid("envelope scaling divisor must be positive"));
    }
    Ok(envelope_moment_exact(p)?.powf(1.0 / p as f64) / lambda)
}

/// First decomposition term of the add-one tail analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerTailThreshold {
    /// (4d + 7 log(1/delta)) / n.
    pub base: f64,
    /// 30x the base, as it enters the chi-square threshold.
    pub scaled: f64,
}

pub fn hellinger_sq_tail_threshold(n: u64, d: usize, delta: f64) -> Result<HellingerTailThreshold> {
    if n == 0 {
        return Err(Error::Invalid("threshold needs n >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid("confidence level must lie in (0, 1)"));
    }
    let base = (4.0 * d as f64 + 7.0 * delta.recip().ln()) / n as f64;
    Ok(HellingerTailThreshold {
        base,
        scaled: 30.0 * base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{dirac, Distribution};
    use approx::assert_relative_eq;

    #[test]
    fn reciprocal_moment_small_cases() {
        // n = 1, p = 1/2: E[1/(N+1)] = 1/2 * 1 + 1/2 * 1/2.
        assert_relative_eq!(
            expected_inverse_count_plus_one(1, 0.5).unwrap(),
            0.75,
            max_relative = 1e-15
        );
        // p = 1: N = n almost surely.
        assert_relative_eq!(
            expected_inverse_count_plus_one(10, 1.0).unwrap(),
            1.0 / 11.0,
            max_relative = 1e-15
        );
        assert_eq!(expected_inverse_count_plus_one(5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn reciprocal_moment_matches_binomial_sum() {
        // Brute-force oracle at (n, p) = (37, 0.23).
        let (n, p) = (37u64, 0.23f64);
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut sum = pmf;
        for k in 1..=n {
            pmf *= (n - k + 1) as f64 / k as f64 * p / (1.0 - p);
            sum += pmf / (k + 1) as f64;
        }
        assert!((expected_inverse_count_plus_one(n, p).unwrap() - sum).abs() <= 1e-12);
    }

    #[test]
    fn laplace_expectation_hand_values() {
        // Two classes, one observation: both sample outcomes give chi2 = 1/8.
        let p = Distribution::uniform(2).unwrap();
        assert_eq!(exact_laplace_chi2_expectation(&p, 1).unwrap(), 0.125);

        // Point mass: (d-1)/(n+1) with a vanishing correction sum.
        let point = dirac(1, 2).unwrap();
        assert_relative_eq!(
            exact_laplace_chi2_expectation(&point, 5).unwrap(),
            1.0 / 6.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn laplace_expectation_below_dimension_bound() {
        let p = crate::simplex::make_distribution(&[0.6, 0.25, 0.1, 0.05]).unwrap();
        for n in [1u64, 7, 100, 10_000] {
            let e = exact_laplace_chi2_expectation(&p, n).unwrap();
            assert!(e <= 3.0 / (n as f64 + 1.0) + 1e-15);
            assert!(e <= 4.0 / n as f64);
            assert!(e >= 0.0);
        }
    }

    #[test]
    fn poisson_tail_basics() {
        assert_relative_eq!(
            poisson_lower_tail(1.0, 0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!((poisson_lower_tail(10.0, 1_000_000_000).unwrap() - 1.0).abs() < 1e-12);
        // Monotone in k.
        let lo = poisson_lower_tail(20.0, 10).unwrap();
        let hi = poisson_lower_tail(20.0, 15).unwrap();
        assert!(lo < hi);
    }

    #[test]
    fn poisson_tail_survives_huge_means() {
        // exp(-mean) underflows; the log-space ramp-in must still give the
        // central-limit answer P(X <= mean) ~ 1/2.
        let c = poisson_lower_tail(2000.0, 2000).unwrap();
        assert!(c > 0.45 && c < 0.55, "cdf {c}");
    }

    #[test]
    fn quarter_tail_bound_chain() {
        // exact <= Chernoff <= envelope rate, here at lambda_j = 40:
        // P(Poisson(20) <= 10) <= e^(-40/14).
        for lj in [0.5f64, 2.0, 7.7, 40.0, 120.0, 200.0] {
            let exact = poisson_quarter_tail_exact(lj).unwrap();
            let chernoff = poisson_quarter_tail_chernoff(lj);
            let envelope = poisson_quarter_tail_envelope(lj);
            assert!(exact <= chernoff + 1e-15, "lambda_j {lj}");
            assert!(chernoff <= envelope + 1e-15, "lambda_j {lj}");
        }
    }

    #[test]
    fn envelope_tail_values() {
        let env = EnvelopeW::new(1.0).unwrap();
        assert_eq!(envelope_tail(&env, 0.0), 1.0);
        assert_eq!(envelope_tail(&env, -3.0), 1.0);
        let half_point = (ENVELOPE_SCALE * std::f64::consts::LN_2).powi(2);
        assert_relative_eq!(envelope_tail(&env, half_point), 0.5, max_relative = 1e-12);

        let env4 = EnvelopeW::new(4.0).unwrap();
        assert_relative_eq!(
            envelope_tail(&env4, 49.0),
            (-1.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn envelope_sampling_is_seeded_and_nonnegative() {
        let env = EnvelopeW::new(2.0).unwrap();
        let seed = RngSeed::new(11, 4);
        let a = sample_envelope(&env, seed);
        let b = sample_envelope(&env, seed);
        assert_eq!(a, b);
        assert!(a >= 0.0);
    }

    #[test]
    fn envelope_empirical_tail_matches_law() {
        let env = EnvelopeW::new(1.0).unwrap();
        let w = (ENVELOPE_SCALE * std::f64::consts::LN_2).powi(2);
        let mut rng = RngSeed::new(500, 0).rng();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_envelope_with(&env, &mut rng) >= w)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.006, "freq {freq}");
    }

    #[test]
    fn envelope_moments_exact_values() {
        // E[W] = 2 * 196 * 1! = 392; E[W^2] = 4 * 14^4 * 3! = 921984.
        assert_eq!(envelope_moment_exact(1).unwrap(), 392.0);
        assert_eq!(envelope_moment_exact(2).unwrap(), 921_984.0);
    }

    #[test]
    fn envelope_norms_stay_below_stated_bound() {
        for p in 1u32..=8 {
            for lambda in [1.0f64, 2.0, 5.0] {
                let norm = envelope_lp_norm(p, lambda).unwrap();
                let bound = envelope_moment_bound(p as f64, lambda).unwrap();
                assert!(norm < bound, "p {p} lambda {lambda}: {norm} vs {bound}");
            }
        }
    }

    #[test]
    fn hellinger_threshold_substitution() {
        let t = hellinger_sq_tail_threshold(1000, 10, (-1.0f64).exp()).unwrap();
        assert_relative_eq!(t.base, 0.047, max_relative = 1e-12);
        assert_relative_eq!(t.scaled, 1.41, max_relative = 1e-12);
        // Monotone: smaller delta, larger threshold.
        let tighter = hellinger_sq_tail_threshold(1000, 10, (-5.0f64).exp()).unwrap();
        assert!(tighter.base > t.base);
    }
}
