//! Threshold table for one (n, d, delta, kappa), ascending by value.

use crate::config::{self, ThresholdsConfig};
use crate::csvio::write_text;
use crate::CliResult;
use chi2_core::{compare_thresholds, ProbabilitySide, ThresholdFamily, ThresholdValue};
use std::path::Path;

fn side_name(side: ProbabilitySide) -> &'static str {
    match side {
        ProbabilitySide::Upper => "upper",
        ProbabilitySide::Lower => "lower",
    }
}

pub fn table_lines(rows: &[(ThresholdFamily, ThresholdValue)]) -> Vec<String> {
    let mut lines = vec![format!(
        "{:<18} {:>14} {:>6} {:>10} {:>9}",
        "family", "value", "side", "multiplier", "in-domain"
    )];
    for (family, value) in rows {
        lines.push(format!(
            "{:<18} {:>14.6e} {:>6} {:>10} {:>9}",
            family.name(),
            value.value,
            side_name(value.probability_side),
            value.multiplier,
            if value.in_domain { "yes" } else { "no" }
        ));
    }
    lines
}

fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(crate::csvio::fmt_f64(x)))
}

pub fn run(config_path: &Path, out: Option<&Path>) -> CliResult<bool> {
    let cfg: ThresholdsConfig = config::load(config_path)?;
    let rows = compare_thresholds(cfg.n, cfg.d, cfg.delta, cfg.kappa)?;

    for line in table_lines(&rows) {
        println!("{line}");
    }

    if let Some(out) = out {
        let json_rows: Vec<serde_json::Value> = rows
            .iter()
            .map(|(family, value)| {
                serde_json::json!({
                    "family": family.name(),
                    "value": json_number(value.value),
                    "side": side_name(value.probability_side),
                    "multiplier": json_number(value.multiplier),
                    "in_domain": value.in_domain,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "n": cfg.n,
            "d": cfg.d,
            "delta": json_number(cfg.delta),
            "kappa": json_number(cfg.kappa),
            "rows": json_rows,
        });
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| crate::CliError::Io(format!("cannot serialize table: {e}")))?;
        write_text(&out.join("thresholds.json"), &format!("{text}\n"))?;
    }
    Ok(true)
}
