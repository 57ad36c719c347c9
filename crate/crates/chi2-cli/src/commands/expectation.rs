//! Closed-form add-one risk against a seeded Monte Carlo mean, with the
//! dimension-free envelope columns.

use super::{derive_seed, Timings};
use crate::config::{self, ExpectationConfig};
use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::CliResult;
use chi2_core::{compensated_sum, exact_laplace_chi2_expectation, tail_losses, SmoothingRule};
use std::path::Path;
use std::time::Instant;

const COLUMNS: [&str; 14] = [
    "experiment_id",
    "command",
    "distribution",
    "d",
    "n",
    "replications",
    "closed_form",
    "shape_bound",
    "dimension_bound",
    "mc_mean",
    "mc_se",
    "gap_over_se",
    "pass",
    "master_seed",
];

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> CliResult<bool> {
    let cfg: ExpectationConfig = config::load(config_path)?;
    cfg.validate()?;
    let master = seed.unwrap_or(cfg.master_seed);

    let mut results = Table::new(&COLUMNS);
    let mut timings = Timings::new(&cfg.id, "expectation");
    let mut all_pass = true;

    for (ci, case) in cfg.cases.iter().enumerate() {
        let p = case.distribution.resolve(case.d, case.n, None)?;
        let closed = exact_laplace_chi2_expectation(&p, case.n)?;
        let (df, nf) = (case.d as f64, case.n as f64);
        let shape_bound = (df - 1.0) / (nf + 1.0);
        let dimension_bound = df / nf;

        let started = Instant::now();
        let losses = tail_losses(
            &p,
            &SmoothingRule::Fixed(1.0),
            case.n as usize,
            cfg.replications,
            derive_seed(master, ci as u64),
        )?;
        timings.record(
            "case",
            &format!("{};n={}", case.distribution.label(), case.n),
            started.elapsed(),
        );

        let r = cfg.replications as f64;
        let mean = compensated_sum(losses.iter().copied()) / r;
        let var = compensated_sum(losses.iter().map(|&x| (x - mean) * (x - mean))) / (r - 1.0);
        let se = (var / r).sqrt();
        let gap = (mean - closed).abs();
        let gap_over_se = if gap <= 1e-15 { 0.0 } else { gap / se };

        let slop = 1e-12 * (1.0 + dimension_bound);
        let pass = !cfg.assert_bounds
            || (closed <= shape_bound + slop
                && shape_bound <= dimension_bound + slop
                && gap_over_se <= 4.0);
        all_pass &= pass;

        results.push(vec![
            cfg.id.clone(),
            "expectation".to_string(),
            case.distribution.label(),
            case.d.to_string(),
            case.n.to_string(),
            cfg.replications.to_string(),
            fmt_f64(closed),
            fmt_f64(shape_bound),
            fmt_f64(dimension_bound),
            fmt_f64(mean),
            fmt_f64(se),
            fmt_f64(gap_over_se),
            fmt_bool(pass),
            master.to_string(),
        ]);
    }

    std::fs::create_dir_all(out)
        .map_err(|e| crate::CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    results.write(&out.join("results.csv"))?;
    timings.write(out)?;
    Ok(all_pass)
}
