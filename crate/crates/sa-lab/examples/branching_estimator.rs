//! Online estimation of the offspring mean of a branching process with
//! unit immigration, run through the clock-driven recursion.
//!
//! The estimator error `z = theta_hat - theta` follows the recursion with
//! slope `X_prev / S` at each step, where `S` is the running observation
//! total. That slope makes the algebra exact: the compounded scale equals
//! `S` itself, the normalized remainder vanishes after the first step, and
//! `sqrt(S / theta) z` is asymptotically standard normal in both the
//! stable and the explosive regime.

use sa_lab::asymptotics::asymptotic_decomposition;
use sa_lab::models::{build_model, ModelId, ModelName};
use sa_lab::process_core::TimeGrid;
use sa_lab::rm_engine::simulate;
use sa_lab::Result;
use std::sync::Arc;

pub fn main() -> Result<()> {
    let grid = Arc::new(TimeGrid::discrete(1000)?);
    for (theta, theta0) in [(0.5, 7.0), (2.0, -5.0)] {
        let model = build_model(
            &ModelId::new(ModelName::GaltonWatson)
                .with("theta", theta)
                .with("theta0", theta0),
        )?;
        let run = simulate(&model, &grid, 2024)?;
        let dec = asymptotic_decomposition(&run)?;

        let n = grid.n_steps();
        let s_total = run.ctx(n - 1).obs_sum;
        let estimate = theta + run.z().terminal();
        let normalized = (s_total / theta).sqrt() * run.z().terminal();

        // The scale must reproduce the observation total step by step.
        let mut worst_scale_gap = 0.0_f64;
        for i in 0..n {
            let s = run.ctx(i).obs_sum;
            worst_scale_gap = worst_scale_gap.max((dec.scale[i + 1] - s).abs() / s);
        }
        let worst_remainder = dec.remainder[1..]
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));

        println!("offspring mean {theta} (started from {theta0}):");
        println!("  final estimate      {estimate:.6}");
        println!("  observation total   {s_total:.3e}");
        println!("  normalized error    {normalized:+.4}");
        println!("  scale vs total      {worst_scale_gap:.2e} (worst relative gap)");
        println!("  remainder after 1   {worst_remainder:.2e} (exactly zero in real arithmetic)");
        println!(
            "  reconstruction      {:.2e}",
            dec.reconstruction_error
        );
        println!();
    }
    Ok(())
}
