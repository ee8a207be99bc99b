//! Convergence-rate audits at two candidate exponents.
//!
//! Given a run, a normalization family `gamma`, and a candidate rate
//! exponent `delta`, the audit checks the integral and discrete-sum
//! conditions under which `gamma^delta z^2` stays controlled, plus the
//! gain-mean family that separates achievable exponents from optimistic
//! ones. The linear model with gain `0.6/(1+K)` makes the boundary sharp:
//! its normalized gain mean climbs to exactly 0.6, so every exponent below
//! that passes and every exponent above it leaves a divergent shortfall.

use sa_lab::diagnostics::{check_rate_conditions, rate_monitor, Thresholds, Verdict};
use sa_lab::models::{build_model, ModelId, ModelName};
use sa_lab::process_core::TimeGrid;
use sa_lab::rm_engine::simulate;
use sa_lab::Result;
use std::sync::Arc;

pub fn main() -> Result<()> {
    let model = build_model(&ModelId::new(ModelName::LinearStandard).with("alpha", 0.6))?;
    let grid = Arc::new(TimeGrid::continuous(5000.0, 0.1)?);
    let run = simulate(&model, &grid, 3)?;
    let th = Thresholds::default();

    for delta in [0.25, 0.65] {
        println!("rate audit at exponent delta = {delta} (critical exponent 1):");
        let reports = check_rate_conditions(&run, delta, 1.0, &th)?;
        for r in &reports {
            let witness = match r.witness_step {
                Some(step) => format!(" at step {step}"),
                None => String::new(),
            };
            println!(
                "  {:<10} {:<13} final {:+.3e}{witness}",
                r.id.to_string(),
                r.verdict.to_string(),
                r.monitored_final
            );
            if r.verdict != Verdict::Holds {
                println!("             {}", r.note);
            }
        }
        println!();
    }

    // The monitor itself: gamma^delta z^2 along the run.
    let gamma = run.gamma_path();
    for delta in [0.25, 0.65] {
        let monitor = rate_monitor(&run, &gamma, delta)?;
        let mid = monitor.values()[grid.n_steps() / 2];
        println!(
            "monitor gamma^{delta} z^2: mid-run {mid:.3e}, terminal {:.3e}",
            monitor.terminal()
        );
    }
    Ok(())
}
