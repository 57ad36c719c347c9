//! Monte Carlo tail of the estimation loss on a (n, delta) grid, tabulated
//! against guarantee thresholds and plotted as quantile curves.

use super::{derive_seed, Timings};
use crate::config::{self, TailRiskConfig};
use crate::csvio::{fmt_bool, fmt_f64, Table};
use crate::svg::{Plot, Series, PALETTE};
use crate::CliResult;
use chi2_core::{estimate_exceedance, tail_losses, threshold, ThresholdSpec};
use std::path::Path;
use std::time::Instant;

const COLUMNS: [&str; 23] = [
    "experiment_id",
    "command",
    "distribution",
    "estimator",
    "n",
    "d",
    "delta",
    "replications",
    "confidence",
    "family",
    "threshold_value",
    "probability_side",
    "multiplier",
    "guarantee_prob",
    "in_domain",
    "asserted",
    "exceed_count",
    "point_estimate",
    "ci_low",
    "ci_high",
    "infinite_count",
    "pass",
    "master_seed",
];

/// Smallest sampled loss whose empirical exceedance is at most `tail_prob`.
fn upper_quantile(sorted: &[f64], tail_prob: f64) -> f64 {
    let r = sorted.len();
    let idx = ((r as f64 * (1.0 - tail_prob)).ceil() as usize).clamp(1, r) - 1;
    sorted[idx]
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> CliResult<bool> {
    let cfg: TailRiskConfig = config::load(config_path)?;
    cfg.validate()?;
    let master = seed.unwrap_or(cfg.master_seed);
    let families = cfg.resolved_families()?;
    let matched = cfg.estimator.matched_family();

    let mut results = Table::new(&COLUMNS);
    let mut timings = Timings::new(&cfg.id, "tail-risk");
    let mut quantiles: Vec<(u64, Vec<(f64, f64)>)> = Vec::new();
    let mut all_pass = true;

    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let mut curve = Vec::new();
        for (di, &delta) in cfg.delta_grid.iter().enumerate() {
            let point_seed = derive_seed(master, (ni * cfg.delta_grid.len() + di) as u64);
            let p = cfg.distribution.resolve(cfg.d, n, Some(delta))?;
            let rule = cfg.estimator.rule(delta);
            let started = Instant::now();
            let mut losses = tail_losses(&p, &rule, n as usize, cfg.replications, point_seed)?;
            timings.record(
                "grid-point",
                &format!("n={n};delta={delta}"),
                started.elapsed(),
            );

            for &family in &families {
                let spec = ThresholdSpec::new(family, n, cfg.d, delta);
                let value = threshold(&spec)?;
                let est = estimate_exceedance(&losses, value.value, cfg.confidence)?;
                let guarantee = value.multiplier * delta;
                let asserted = cfg.assert_bounds && matched == Some(family) && value.in_domain;
                let pass = !asserted || est.consistent_with_bound(guarantee);
                all_pass &= pass;
                results.push(vec![
                    cfg.id.clone(),
                    "tail-risk".to_string(),
                    cfg.distribution.label(),
                    cfg.estimator.label(),
                    n.to_string(),
                    cfg.d.to_string(),
                    fmt_f64(delta),
                    cfg.replications.to_string(),
                    fmt_f64(cfg.confidence),
                    family.name().to_string(),
                    fmt_f64(value.value),
                    match value.probability_side {
                        chi2_core::ProbabilitySide::Upper => "upper".to_string(),
                        chi2_core::ProbabilitySide::Lower => "lower".to_string(),
                    },
                    fmt_f64(value.multiplier),
                    fmt_f64(guarantee),
                    fmt_bool(value.in_domain),
                    fmt_bool(asserted),
                    est.exceed_count.to_string(),
                    fmt_f64(est.point),
                    fmt_f64(est.ci_low),
                    fmt_f64(est.ci_high),
                    est.infinite_count.to_string(),
                    fmt_bool(pass),
                    master.to_string(),
                ]);
            }

            losses.sort_by(f64::total_cmp);
            let mult = matched
                .map(|family| threshold(&ThresholdSpec::new(family, n, cfg.d, delta)))
                .transpose()?
                .map_or(4.0, |v| v.multiplier);
            curve.push((delta, upper_quantile(&losses, mult * delta)));
        }
        quantiles.push((n, curve));
    }

    std::fs::create_dir_all(out)
        .map_err(|e| crate::CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    results.write(&out.join("results.csv"))?;
    timings.write(out)?;

    let plot = build_plot(&cfg, &families, &quantiles)?;
    crate::csvio::write_text(&out.join(format!("{}.svg", cfg.id)), &plot.render())?;
    Ok(all_pass)
}

fn build_plot(
    cfg: &TailRiskConfig,
    families: &[chi2_core::ThresholdFamily],
    quantiles: &[(u64, Vec<(f64, f64)>)],
) -> CliResult<Plot> {
    let single_n = cfg.n_grid.len() == 1;
    let mut series = Vec::new();
    for (fi, &family) in families.iter().enumerate() {
        for &n in &cfg.n_grid {
            let points: Vec<(f64, f64)> = cfg
                .delta_grid
                .iter()
                .map(|&delta| {
                    threshold(&ThresholdSpec::new(family, n, cfg.d, delta))
                        .map(|v| (delta, v.value))
                })
                .collect::<Result<_, _>>()?;
            let label = if single_n {
                family.name().to_string()
            } else {
                format!("{} n={n}", family.name())
            };
            series.push(Series {
                label,
                color: PALETTE[fi % PALETTE.len()],
                dashed: true,
                markers: false,
                points,
            });
        }
    }
    for (qi, (n, curve)) in quantiles.iter().enumerate() {
        let label = if single_n {
            "sampled loss quantile".to_string()
        } else {
            format!("sampled loss quantile n={n}")
        };
        series.push(Series {
            label,
            color: PALETTE[(families.len() + qi) % PALETTE.len()],
            dashed: false,
            markers: true,
            points: curve.clone(),
        });
    }
    Ok(Plot {
        title: format!(
            "{}: {} loss tail, {} on d={}",
            cfg.id,
            cfg.estimator.label(),
            cfg.distribution.label(),
            cfg.d
        ),
        x_label: "delta".to_string(),
        y_label: "chi-square loss".to_string(),
        log_x: true,
        log_y: true,
        series,
    })
}
