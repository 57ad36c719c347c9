//! Divergences between simplex points and the per-coordinate loss
//! F(p, q) = (p - q)^2 / q with its two-sided square-root-distance bounds.
//!
//! Conventions: a 0/0 coordinate contributes 0; q_j = 0 < p_j makes chi2 and
//! KL equal +infinity. Infinity is a legitimate value, not an error, because
//! tail experiments must count infinite-loss replications.

use crate::error::{Error, Result};
use crate::simplex::Distribution;
use crate::sum::compensated_sum;

fn check_dims(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(())
}

/// chi-square divergence sum_j (p_j - q_j)^2 / q_j.
pub fn chi2(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    let mut terms = Vec::with_capacity(p.dim());
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if qj > 0.0 {
            let diff = pj - qj;
            terms.push(diff * diff / qj);
        } else if pj > 0.0 {
            return Ok(f64::INFINITY);
        }
        // p_j = q_j = 0 contributes nothing.
    }
    Ok(compensated_sum(terms))
}

/// Same divergence via sum_j p_j^2 / q_j - 1; requires strictly positive Q.
/// Agrees with `chi2` to ~1e-10 relative, which unit tests pin down.
pub fn chi2_via_second_moment(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    if q.probs().iter().any(|&qj| qj <= 0.0) {
        return Err(Error::Invalid("second-moment form needs q_j > 0 for all j"));
    }
    let sum = compensated_sum(
        p.probs()
            .iter()
            .zip(q.probs())
            .map(|(&pj, &qj)| pj * pj / qj),
    );
    Ok(sum - 1.0)
}

/// Kullback-Leibler divergence sum_j p_j log(p_j / q_j).
pub fn kl(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    let mut terms = Vec::with_capacity(p.dim());
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if pj > 0.0 {
            if qj <= 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(pj * (pj / qj).ln());
        }
    }
    // Clamp float residue: KL is nonnegative but compensated rounding can
    // leave a tiny negative when P = Q.
    Ok(compensated_sum(terms).max(0.0))
}

/// Squared Hellinger-type sum sum_j (sqrt(p_j) - sqrt(q_j))^2.
pub fn hellinger_sq(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    Ok(compensated_sum(p.probs().iter().zip(q.probs()).map(
        |(&pj, &qj)| {
            let diff = pj.sqrt() - qj.sqrt();
            diff * diff
        },
    )))
}

/// Total variation distance (1/2) sum_j |p_j - q_j|.
pub fn tv(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    Ok(0.5
        * compensated_sum(
            p.probs()
                .iter()
                .zip(q.probs())
                .map(|(&pj, &qj)| (pj - qj).abs()),
        ))
}

/// Per-coordinate loss F(p, q) = (p - q)^2 / q.
pub fn f_loss(p: f64, q: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Invalid("f_loss needs p >= 0"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Invalid("f_loss needs q > 0"));
    }
    let diff = p - q;
    Ok(diff * diff / q)
}

/// Comparison slop for the sandwich inequalities: mathematically they hold
/// exactly, the slop only absorbs double-rounding of the two sides.
const SANDWICH_SLOP: f64 = 1e-12;

/// Outcome of checking (sqrt p - sqrt q)^2 <= F(p, q) <= 15 (sqrt p - sqrt q)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// F minus the lower side (nonnegative when the bound holds).
    pub lower_slack: f64,
    /// Upper side minus F (nonnegative when the bound holds).
    pub upper_slack: f64,
}

/// Checks the two-sided bound on F. The upper side is only claimed for
/// q >= p/8; outside that range the call fails rather than reporting a
/// meaningless violation.
pub fn f_sandwich_check(p: f64, q: f64) -> Result<SandwichReport> {
    let f = f_loss(p, q)?;
    if q < p / 8.0 {
        return Err(Error::OutOfDomain("sandwich bound needs q >= p/8"));
    }
    let h = {
        let diff = p.sqrt() - q.sqrt();
        diff * diff
    };
    let slop = SANDWICH_SLOP * (1.0 + f.abs());
    Ok(SandwichReport {
        lower_ok: h <= f + slop,
        upper_ok: f <= 15.0 * h + slop,
        lower_slack: f - h,
        upper_slack: 15.0 * h - f,
    })
}

/// Unconditional upper bound on F(p, q): 15 (sqrt p - sqrt q)^2 plus the
/// p^2/q spillover term active when q <= p/8. The spillover coefficient 1 is
/// sharp (approached as q/p -> 0); no smaller constant works.
pub fn f_extended_bound(p: f64, q: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Invalid("f_extended_bound needs p >= 0"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Invalid("f_extended_bound needs q > 0"));
    }
    let diff = p.sqrt() - q.sqrt();
    let mut bound = 15.0 * diff * diff;
    if q <= p / 8.0 {
        bound += p * p / q;
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{dirac, make_distribution, Distribution};
    use approx::assert_relative_eq;

    fn d(v: &[f64]) -> Distribution {
        make_distribution(v).unwrap()
    }

    #[test]
    fn all_divergences_vanish_at_identity() {
        let p = d(&[0.2, 0.3, 0.5]);
        assert_eq!(chi2(&p, &p).unwrap(), 0.0);
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        assert_eq!(hellinger_sq(&p, &p).unwrap(), 0.0);
        assert_eq!(tv(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn chi2_of_dirac_against_uniform_is_d_minus_one() {
        for dd in [2usize, 5, 17] {
            let point = dirac(1, dd).unwrap();
            let unif = Distribution::uniform(dd).unwrap();
            assert_relative_eq!(
                chi2(&point, &unif).unwrap(),
                (dd - 1) as f64,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn disjoint_supports() {
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.0, 1.0]);
        assert_eq!(chi2(&p, &q).unwrap(), f64::INFINITY);
        assert_eq!(kl(&p, &q).unwrap(), f64::INFINITY);
        assert_eq!(tv(&p, &q).unwrap(), 1.0);
        assert_eq!(hellinger_sq(&p, &q).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.3, 0.3, 0.4]);
        assert!(chi2(&p, &q).is_err());
        assert!(kl(&p, &q).is_err());
        assert!(tv(&p, &q).is_err());
    }

    #[test]
    fn second_moment_form_matches_direct_sum() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.75, 0.25]);
        assert_relative_eq!(
            chi2_via_second_moment(&p, &q).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            chi2(&p, &q).unwrap(),
            chi2_via_second_moment(&p, &q).unwrap(),
            max_relative = 1e-10
        );

        let point = dirac(1, 4).unwrap();
        let unif = Distribution::uniform(4).unwrap();
        assert_relative_eq!(
            chi2_via_second_moment(&point, &unif).unwrap(),
            3.0,
            max_relative = 1e-12
        );

        assert_eq!(
            chi2_via_second_moment(&d(&[0.5, 0.5]), &d(&[0.5, 0.5])).unwrap(),
            0.0
        );
        assert!(chi2_via_second_moment(&point, &d(&[1.0, 0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn f_loss_examples() {
        assert_eq!(f_loss(0.3, 0.3).unwrap(), 0.0);
        assert_relative_eq!(f_loss(0.5, 0.25).unwrap(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(f_loss(1.0, 0.125).unwrap(), 6.125, max_relative = 1e-15);
        assert!(f_loss(0.5, 0.0).is_err());
        assert!(f_loss(-0.1, 0.5).is_err());
    }

    #[test]
    fn sandwich_at_the_extremal_ratio() {
        // q = p/8 is where the factor-15 side is tightest: F = 6.125 against
        // 15 (1 - sqrt(1/8))^2 ~ 6.274.
        let rep = f_sandwich_check(1.0, 0.125).unwrap();
        assert!(rep.lower_ok && rep.upper_ok);
        assert!(rep.upper_slack > 0.0 && rep.upper_slack < 0.2);
    }

    #[test]
    fn sandwich_equality_at_p_equals_q() {
        let rep = f_sandwich_check(0.3, 0.3).unwrap();
        assert!(rep.lower_ok && rep.upper_ok);
        assert_eq!(rep.lower_slack, 0.0);
        assert_eq!(rep.upper_slack, 0.0);
    }

    #[test]
    fn sandwich_rejects_tiny_q() {
        assert_eq!(
            f_sandwich_check(0.4, 0.01),
            Err(Error::OutOfDomain("sandwich bound needs q >= p/8"))
        );
    }

    #[test]
    fn extended_bound_dominates_f_everywhere() {
        // Spot-check both branches; the million-pair sweep runs in the
        // acceptance suite.
        for &(p, q) in &[
            (1.0, 0.125),
            (1.0, 0.01),
            (0.3, 0.9),
            (1e-6, 1e-9),
            (0.0, 0.4),
        ] {
            let f = f_loss(p, q).unwrap();
            let bound = f_extended_bound(p, q).unwrap();
            assert!(f <= bound * (1.0 + 1e-12), "p {p} q {q}");
        }
    }

    #[test]
    fn hellinger_never_exceeds_finite_chi2() {
        let pairs = [
            (d(&[0.2, 0.3, 0.5]), d(&[0.4, 0.4, 0.2])),
            (d(&[0.9, 0.05, 0.05]), d(&[0.2, 0.5, 0.3])),
        ];
        for (p, q) in pairs {
            assert!(hellinger_sq(&p, &q).unwrap() <= chi2(&p, &q).unwrap());
        }
    }
}
