pub mod audit;
pub mod expectation;
pub mod lower_bound;
pub mod tail_risk;
pub mod thresholds;

use crate::csvio::Table;
use crate::CliResult;
use std::path::Path;

/// Distinct stream key per unit of work under one master seed (SplitMix64
/// step), so grid points never share replication streams.
pub(crate) fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const TIMING_COLUMNS: [&str; 5] =
    ["experiment_id", "command", "unit", "label", "wall_time_ms"];

/// Wall-clock sidecar. Kept out of results.csv so results stay byte-identical
/// across reruns and worker counts.
pub(crate) struct Timings {
    table: Table,
    id: String,
    command: &'static str,
}

impl Timings {
    pub fn new(id: &str, command: &'static str) -> Self {
        Self {
            table: Table::new(&TIMING_COLUMNS),
            id: id.to_string(),
            command,
        }
    }

    pub fn record(&mut self, unit: &str, label: &str, elapsed: std::time::Duration) {
        self.table.push(vec![
            self.id.clone(),
            self.command.to_string(),
            unit.to_string(),
            label.to_string(),
            format!("{:.3}", elapsed.as_secs_f64() * 1e3),
        ]);
    }

    pub fn write(&self, out: &Path) -> CliResult<()> {
        self.table.write(&out.join("timings.csv"))
    }
}
