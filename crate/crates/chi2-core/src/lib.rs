//! Estimation of discrete distributions under chi-square loss: smoothed
//! estimators, divergences, exact closed forms, high-probability loss
//! thresholds with their stated validity ranges, deterministic lower-bound
//! certificates, and a seeded Monte Carlo harness whose results are
//! bit-identical across worker counts.
//!
//! Classes are labeled 1..=d in every public interface; probability vectors
//! must sum to 1 within 1e-12.

// `!(x > 0.0)` guards double as NaN rejection; the partial_cmp rewrite
// clippy suggests obscures that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversarial;
pub mod bounds;
pub mod divergence;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod montecarlo;
pub mod simplex;
pub mod sum;

pub use adversarial::{
    all_ones_estimate, build_family, conf_indep_certificate, conf_indep_certificate_for_estimate,
    minimax_certificate, minimax_certificate_for_estimate, ConfIndepCertificate, LossRegime,
    MinimaxCertificate, TwoPointFamily, ALPHA_CUTOFF_DIVISOR, CONF_INDEP_CERT_COEFF,
    MINIMAX_CERT_COEFF,
};
pub use bounds::{
    compare_thresholds, threshold, ProbabilitySide, ThresholdFamily, ThresholdSpec, ThresholdValue,
    CONF_DEP_UPPER_COEFF, CONF_INDEP_LOWER_DENOM, LAPLACE_UPPER_COEFF, MINIMAX_LOWER_DENOM,
    RESIDUAL_COEFF,
};
pub use divergence::{
    chi2, chi2_via_second_moment, f_extended_bound, f_loss, f_sandwich_check, hellinger_sq, kl, tv,
    SandwichReport,
};
pub use error::{Error, Result};
pub use estimator::{estimate, min_mass, resolve_lambda, SmoothingRule};
pub use exact::{
    envelope_lp_norm, envelope_moment_bound, envelope_moment_exact, envelope_tail,
    exact_laplace_chi2_expectation, expected_inverse_count_plus_one, hellinger_sq_tail_threshold,
    poisson_lower_tail, poisson_quarter_tail_chernoff, poisson_quarter_tail_envelope,
    poisson_quarter_tail_exact, sample_envelope, sample_envelope_with, EnvelopeW,
    HellingerTailThreshold, ENVELOPE_MOMENT_COEFF, ENVELOPE_SCALE,
};
pub use montecarlo::{
    clopper_pearson, coupled_poisson_counts, domination_audit, envelope_sum_moment_check,
    envelope_sum_norm_bound, estimate_exceedance, hellinger_decomposition_audit,
    large_lambda_decomposition_audit, large_lambda_scan, poissonized_counts, residual,
    residual_tail_check, run_tail_experiment, run_tail_experiment_sequential, tail_losses,
    tail_losses_sequential, CoupledCounts, DecompositionAudit, DominationReport,
    DominationViolation, LambdaScanRow, LargeLambdaAudit, MomentCheck, ResidualKind,
    ResidualReport, ResidualTailReport, TailEstimate, TailExperiment, AUDIT_SLOP,
    DEFAULT_CI_CONFIDENCE,
};
pub use simplex::{
    count_classes, dirac, make_distribution, sample_counts, sample_iid, CountVector, Distribution,
    RngSeed, Sample, SIMPLEX_SUM_TOLERANCE,
};
pub use sum::compensated_sum;
