//! Replicated studies of terminal statistics.
//!
//! Every replication is a pure function of `(seed, stream)` — stream `i + 1`
//! drives replication `i` — so results are independent of thread count and
//! scheduling. Replications run in parallel, are collected back in index
//! order, and are reduced sequentially with compensated sums, which makes
//! whole summaries reproducible bit for bit.
//!
//! Divergent replications are counted and excluded from every moment; a
//! study in which nothing survives is an error rather than a row of NaNs.

use rayon::prelude::*;
use std::sync::Arc;

use crate::asymptotics::{
    alpha_average, asymptotic_decomposition, discounted_weight_spread, polyak_average,
    predicted_variance, scale_discounted_weight, Decomposition, Prediction, StatKind, WeightKind,
};
use crate::diagnostics::rate_monitor;
use crate::error::{Error, Result};
use crate::models::{build_model, resolved_params, ModelId, ModelName, ModelSpec};
use crate::process_core::{NeumaierSum, TimeGrid};
use crate::rm_engine::{simulate_stream, RmRun};
use crate::rng::normal_cdf;

/// One terminal statistic of a replicated study.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// Terminal error scaled by the model's predicted normalizer.
    ZTerminal,
    /// Terminal averaged error, scaled likewise. `adaptive_alpha` switches
    /// from the model's declared averaging weight to the adaptive weight
    /// with that exponent.
    ZbarTerminal { adaptive_alpha: Option<f64> },
    /// Terminal value of the rate monitor `gamma^delta z^2`.
    RateMonitor { delta: f64 },
    /// Absolute normalized remainder at the horizon.
    RemainderAbs,
}

impl Statistic {
    /// Row label used in summary tables.
    pub fn label(&self) -> String {
        match self {
            Statistic::ZTerminal => "z_terminal".into(),
            Statistic::ZbarTerminal { .. } => "zbar_terminal".into(),
            Statistic::RateMonitor { delta } => format!("rate_monitor_{delta}"),
            Statistic::RemainderAbs => "remainder_abs".into(),
        }
    }

    fn prediction_kind(&self) -> Option<StatKind> {
        match self {
            Statistic::ZTerminal => Some(StatKind::Terminal),
            Statistic::ZbarTerminal { .. } => Some(StatKind::Averaged),
            _ => None,
        }
    }
}

/// A replicated study over one model, grid, and master seed.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub model: ModelId,
    pub grid: Arc<TimeGrid>,
    pub reps: usize,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
}

/// Moments of one statistic across the surviving replications.
#[derive(Debug, Clone)]
pub struct StatSummary {
    pub label: String,
    /// Replications that contributed (total minus divergent).
    pub n_used: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// 90th percentile of the absolute values (nearest rank).
    pub abs_p90: f64,
    /// The asymptotic prediction for this statistic, when theory pins one.
    pub prediction: Prediction,
    /// Kolmogorov–Smirnov distance against the centered normal law with
    /// the predicted variance; `None` when there is no prediction.
    pub ks: Option<f64>,
}

/// Full outcome of a replicated study.
#[derive(Debug, Clone)]
pub struct McSummary {
    pub model: ModelId,
    pub reps: usize,
    pub divergent: usize,
    pub stats: Vec<StatSummary>,
}

/// How to turn a raw terminal error into its normalized statistic.
enum TerminalNorm {
    /// `sqrt(1 + K_T)`.
    ClockHalf,
    /// `(1 + K_T)^p`.
    ClockPow(f64),
    /// `sqrt(S_T / theta)` from the running observation total.
    ObsOverTheta(f64),
    /// The run's own self-normalizer `chi_T`.
    Chi,
}

/// Normalizer of the averaged statistic.
enum AveragedNorm {
    ClockHalf,
    /// `eps_T / sqrt(Btilde_T)`: the weight integral against the root of
    /// its noise-clock spread. Self-normalizing for models without a
    /// closed-form prediction.
    Universal,
}

struct NormPlan {
    terminal: TerminalNorm,
    averaged: AveragedNorm,
}

impl NormPlan {
    fn for_model(id: &ModelId) -> Result<NormPlan> {
        Ok(match id.name {
            ModelName::LinearStandard => NormPlan {
                terminal: TerminalNorm::ClockHalf,
                averaged: AveragedNorm::ClockHalf,
            },
            ModelName::LinearSlowGain | ModelName::RmSlowGain => {
                let r = *resolved_params(id)?.get("r").unwrap();
                NormPlan {
                    terminal: TerminalNorm::ClockPow(r / 2.0),
                    averaged: AveragedNorm::ClockHalf,
                }
            }
            ModelName::GaltonWatson => {
                let theta = *resolved_params(id)?.get("theta").unwrap();
                NormPlan {
                    terminal: TerminalNorm::ObsOverTheta(theta),
                    averaged: AveragedNorm::Universal,
                }
            }
            ModelName::DeterministicRegression | ModelName::Custom => NormPlan {
                terminal: TerminalNorm::Chi,
                averaged: AveragedNorm::Universal,
            },
        })
    }
}

enum RepOutcome {
    Divergent,
    Values(Vec<f64>),
}

fn terminal_norm_value(run: &RmRun, dec: &Decomposition, norm: &TerminalNorm) -> f64 {
    let horizon = run.grid().horizon();
    match norm {
        TerminalNorm::ClockHalf => (1.0 + horizon).sqrt(),
        TerminalNorm::ClockPow(p) => (1.0 + horizon).powf(*p),
        TerminalNorm::ObsOverTheta(theta) => {
            let n = run.grid().n_steps();
            (run.ctx(n - 1).obs_sum / theta).sqrt()
        }
        TerminalNorm::Chi => *dec.chi.last().unwrap(),
    }
}

fn evaluate_rep(
    model: &ModelSpec,
    grid: &Arc<TimeGrid>,
    seed: u64,
    stream: u64,
    stats: &[Statistic],
    plan: &NormPlan,
) -> Result<RepOutcome> {
    let run = simulate_stream(model, grid, seed, stream)?;
    if run.divergence().is_some() {
        return Ok(RepOutcome::Divergent);
    }
    let dec = asymptotic_decomposition(&run)?;
    let mut values = Vec::with_capacity(stats.len());
    for stat in stats {
        let v = match stat {
            Statistic::ZTerminal => {
                run.z().terminal() * terminal_norm_value(&run, &dec, &plan.terminal)
            }
            Statistic::ZbarTerminal { adaptive_alpha } => {
                let avg = match adaptive_alpha {
                    Some(a) => alpha_average(&run, &dec, *a)?,
                    None => polyak_average(&run, &WeightKind::Custom(model.weight_g.clone()))?,
                };
                let norm = match plan.averaged {
                    AveragedNorm::ClockHalf => (1.0 + grid.horizon()).sqrt(),
                    AveragedNorm::Universal => {
                        let b = scale_discounted_weight(&dec, &avg.eps)?;
                        let spread = discounted_weight_spread(&dec, &b)?;
                        avg.eps.last().unwrap() / spread.last().unwrap().sqrt()
                    }
                };
                avg.zbar.terminal() * norm
            }
            Statistic::RateMonitor { delta } => {
                let gamma = run.gamma_path();
                rate_monitor(&run, &gamma, *delta)?.terminal()
            }
            Statistic::RemainderAbs => dec.remainder.last().unwrap().abs(),
        };
        values.push(v);
    }
    Ok(RepOutcome::Values(values))
}

/// Run a replicated study for a registry model.
pub fn run_study(cfg: &McConfig) -> Result<McSummary> {
    let model = build_model(&cfg.model)?;
    run_study_with(&model, &cfg.grid, cfg.reps, cfg.seed, &cfg.statistics)
}

/// Run a replicated study for an explicit model (the only route for custom
/// specs, which have no registry entry).
pub fn run_study_with(
    model: &ModelSpec,
    grid: &Arc<TimeGrid>,
    reps: usize,
    seed: u64,
    statistics: &[Statistic],
) -> Result<McSummary> {
    if reps == 0 {
        return Err(Error::InvalidParameter(
            "a replicated study needs at least one replication".into(),
        ));
    }
    if statistics.is_empty() {
        return Err(Error::InvalidParameter(
            "a replicated study needs at least one statistic".into(),
        ));
    }
    let plan = NormPlan::for_model(&model.id)?;
    let outcomes: Vec<RepOutcome> = (0..reps)
        .into_par_iter()
        .map(|i| evaluate_rep(model, grid, seed, i as u64 + 1, statistics, &plan))
        .collect::<Result<Vec<_>>>()?;

    let mut divergent = 0usize;
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); statistics.len()];
    for outcome in &outcomes {
        match outcome {
            RepOutcome::Divergent => divergent += 1,
            RepOutcome::Values(vals) => {
                for (col, &v) in columns.iter_mut().zip(vals) {
                    col.push(v);
                }
            }
        }
    }
    if divergent == reps {
        return Err(Error::AllReplicationsDivergent { count: reps });
    }

    let stats = statistics
        .iter()
        .zip(&columns)
        .map(|(stat, col)| summarize(stat, col, &model.id))
        .collect::<Result<Vec<_>>>()?;

    Ok(McSummary {
        model: model.id.clone(),
        reps,
        divergent,
        stats,
    })
}

fn summarize(stat: &Statistic, values: &[f64], id: &ModelId) -> Result<StatSummary> {
    let n = values.len();
    let mut sum = NeumaierSum::new();
    for &v in values {
        sum.add(v);
    }
    let mean = sum.value() / n as f64;
    let variance = if n > 1 {
        let mut sq = NeumaierSum::new();
        for &v in values {
            let d = v - mean;
            sq.add(d * d);
        }
        sq.value() / (n - 1) as f64
    } else {
        0.0
    };
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| a.total_cmp(b));
    let abs_p90 = abs[((0.9 * n as f64).ceil() as usize).clamp(1, n) - 1];

    let prediction = match stat.prediction_kind() {
        Some(kind) => predicted_variance(id, kind)?,
        None => Prediction::NoPrediction,
    };
    let ks = match &prediction {
        Prediction::Predicted { variance, .. } => Some(ks_statistic(values, *variance)),
        Prediction::NoPrediction => None,
    };
    Ok(StatSummary {
        label: stat.label(),
        n_used: n,
        mean,
        variance,
        abs_p90,
        prediction,
        ks,
    })
}

/// Kolmogorov–Smirnov distance of a sample against the centered normal law
/// with the given variance. A degenerate comparison (no spread to compare
/// against) scores 0.5, the distance of a point mass at the median.
pub fn ks_statistic(values: &[f64], variance: f64) -> f64 {
    if values.is_empty() || !(variance > 0.0) || !variance.is_finite() {
        return 0.5;
    }
    let sigma = variance.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x / sigma);
        d = d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n));
    }
    d
}
