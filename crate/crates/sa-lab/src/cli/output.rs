//! Deterministic CSV outputs with a provenance header.
//!
//! Every file starts with `# sa-lab <version> config=<hash> seed=<seed>`:
//! the FNV-1a hash of the raw configuration bytes ties a table back to the
//! exact file that produced it. Floats are written in full `{:.16e}`
//! precision so round-tripping a table loses nothing.

use std::fs;
use std::path::Path;

use crate::diagnostics::ConditionReport;
use crate::error::{Error, Result};
use crate::montecarlo::McSummary;
use crate::asymptotics::Prediction;

/// FNV-1a 64-bit hash of raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Provenance stamped into every output header.
#[derive(Debug, Clone, Copy)]
pub struct OutputMeta {
    pub config_hash: u64,
    pub seed: u64,
}

impl OutputMeta {
    fn header(&self) -> String {
        format!(
            "# sa-lab {} config={:016x} seed={}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write a purely numeric table; the first column is expected to be time.
pub fn write_table(
    path: &Path,
    meta: &OutputMeta,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    use std::fmt::Write;
    let mut s = meta.header();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s.push('\n');
    }
    write_file(path, &s)
}

/// Write condition-audit reports, one row per condition.
pub fn write_conditions(
    path: &Path,
    meta: &OutputMeta,
    reports: &[ConditionReport],
) -> Result<()> {
    use std::fmt::Write;
    let mut s = meta.header();
    s.push_str("id,verdict,witness_step,monitored_final,threshold\n");
    for r in reports {
        let witness = r
            .witness_step
            .map(|w| w.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{witness},{:.16e},{:.16e}",
            r.id, r.verdict, r.monitored_final, r.threshold
        );
    }
    write_file(path, &s)
}

/// Write the summary of a replicated study, one row per statistic.
pub fn write_mc_summary(path: &Path, meta: &OutputMeta, summary: &McSummary) -> Result<()> {
    use std::fmt::Write;
    let mut s = meta.header();
    s.push_str("statistic,mean,variance,predicted,ks,n,divergent\n");
    for stat in &summary.stats {
        let predicted = match &stat.prediction {
            Prediction::Predicted { variance, .. } => *variance,
            Prediction::NoPrediction => f64::NAN,
        };
        let ks = stat.ks.unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{predicted:.16e},{ks:.16e},{},{}",
            stat.label, stat.mean, stat.variance, stat.n_used, summary.divergent
        );
    }
    write_file(path, &s)
}
