//! Central limit behavior of the linear procedure, checked by replication.
//!
//! For the linear model with gain `alpha/(1+K)` the normalized terminal
//! error `sqrt(1+K) z` tends to a centered normal law with variance
//! `alpha^2 sigma^2 / (2 alpha beta - 1)`, and the averaged iterate
//! reaches `2 alpha sigma^2 / (beta (2 alpha beta - 1))` under the
//! `sqrt(1+K)` normalization. A few hundred replications make both limits
//! visible, including through the Kolmogorov-Smirnov distance.

use sa_lab::asymptotics::Prediction;
use sa_lab::models::{ModelId, ModelName};
use sa_lab::montecarlo::{run_study, McConfig, Statistic};
use sa_lab::process_core::TimeGrid;
use sa_lab::Result;
use std::sync::Arc;

pub fn main() -> Result<()> {
    let cfg = McConfig {
        model: ModelId::new(ModelName::LinearStandard),
        grid: Arc::new(TimeGrid::continuous(200.0, 0.05)?),
        reps: 400,
        seed: 7,
        statistics: vec![
            Statistic::ZTerminal,
            Statistic::ZbarTerminal {
                adaptive_alpha: Some(1.0),
            },
        ],
    };
    let summary = run_study(&cfg)?;

    println!(
        "linear procedure, {} replications to horizon 200 ({} divergent):",
        summary.reps, summary.divergent
    );
    for stat in &summary.stats {
        match (&stat.prediction, stat.ks) {
            (Prediction::Predicted { normalizer, variance }, Some(ks)) => {
                println!(
                    "  {:<14} variance {:.3} (predicted {variance:.3} for {normalizer}), KS {ks:.3}",
                    stat.label, stat.variance
                );
            }
            _ => println!("  {:<14} variance {:.3}", stat.label, stat.variance),
        }
    }
    println!();
    println!("the averaged iterate trades the tight gain for a flatter one:");
    println!("its limit variance is twice the terminal one at these parameters,");
    println!("but it reaches the sqrt(1+K) rate without knowing beta.");
    Ok(())
}
