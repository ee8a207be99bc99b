//! Numerical auditors for the convergence and rate conditions that govern
//! the recursive procedures.
//!
//! Every checker monitors a finite-horizon surrogate of an infinite-horizon
//! statement (a sum that must stay finite, an integral that must diverge, a
//! process that must stay bounded or eventually positive) and reports an
//! honest three-way verdict: `Holds`, `Fails`, or `Inconclusive`. A "fails"
//! verdict always carries a concrete witness step; a "holds" verdict for a
//! divergence-type condition means the monitored quantity crossed the growth
//! threshold, which is evidence, never proof.
//!
//! The classifier thresholds live in [`Thresholds`] and default to the
//! crate-wide constants.

pub mod fixtures;

use std::fmt;

use crate::constants::{
    BOUNDED_RATIO, DECAY_RATIO, DIVERGENT_TAIL_SHARE, EVENTUAL_POSITIVE_FLOOR, FLAT_TAIL_SHARE,
    GROWTH_RATIO, HARD_DIVERGENCE_WITNESS, NEGLIGIBLE_TOTAL, SCAN_EPSILONS,
    SCAN_POINTS_PER_SIGN, TRAJECTORY_SAMPLES, UNBOUNDED_RATIO,
};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, StepCtx};
use crate::process_core::{NeumaierSum, SamplePath, TimeGrid};
use crate::rm_engine::RmRun;

/// Default probe amplitudes for fitting envelopes and scanning sign
/// conditions: one decade per point, both signs.
pub const DEFAULT_U_GRID: [f64; 10] = [
    -10.0, -1.0, -0.1, -0.01, -0.001, 0.001, 0.01, 0.1, 1.0, 10.0,
];

/// Classifier thresholds. The defaults encode: a cumulative sum is treated
/// as finite when the last decade of time contributed less than 1% of the
/// total, divergent when it contributed at least 7% (or the sum crossed the
/// hard witness level), bounded when the decade-over-decade max ratio stays
/// within 2%, and decaying when the last-decade max dropped below 90% of the
/// previous decade's max.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub flat_tail_share: f64,
    pub divergent_tail_share: f64,
    pub hard_divergence: f64,
    pub bounded_ratio: f64,
    pub unbounded_ratio: f64,
    pub decay_ratio: f64,
    pub growth_ratio: f64,
    pub eventual_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            flat_tail_share: FLAT_TAIL_SHARE,
            divergent_tail_share: DIVERGENT_TAIL_SHARE,
            hard_divergence: HARD_DIVERGENCE_WITNESS,
            bounded_ratio: BOUNDED_RATIO,
            unbounded_ratio: UNBOUNDED_RATIO,
            decay_ratio: DECAY_RATIO,
            growth_ratio: GROWTH_RATIO,
            eventual_floor: EVENTUAL_POSITIVE_FLOOR,
        }
    }
}

/// Three-way audit outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifier of an audited condition. The display string is the stable id
/// used in report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionId {
    /// Drift pushes toward the root: `H(u)u < 0` off zero, `H(0) = 0`.
    DriftSign,
    /// Quadratic-characteristic density dominated by an integrable bound.
    NoiseDensityBound,
    /// Jump-step drift dominated by a linear envelope.
    LinearEnvelope,
    /// Squared envelope summable over jump steps.
    JumpEnvelopeSum,
    /// Restoring-force infimum accumulates without bound.
    DriftInfimum,
    /// Positive part of the one-step energy change dominated on jumps.
    JumpDominated,
    /// Mixed continuous/jump restoring infimum accumulates without bound.
    MixedInfimum,
    /// Two-sided linear squeeze group (aggregate).
    SqueezeGroup,
    /// Two-sided linear squeeze `G|u| <= |H(u)| <= G~|u|`.
    SqueezeEnvelope,
    /// Upper squeeze bound squared, summable over jumps.
    SqueezeJumpSum,
    /// Lower squeeze bound accumulates without bound.
    SqueezeGrowth,
    /// Relaxed squeeze group tailored to coarse jumps (aggregate).
    RelaxedGroup,
    /// Oversized-jump excess summable.
    RelaxedJumpSum,
    /// Mixed restoring mass accumulates despite coarse jumps.
    RelaxedGrowth,
    /// Rate-transfer integral with the exponential-rate comparison term.
    RateIntegral,
    /// Noise intensity weighted by the target rate stays summable.
    RateNoiseIntegral,
    /// Discrete-time rate-transfer sum.
    RateDiscreteSum,
    /// Normalized cumulative gain stays bounded.
    GainMeanBounded,
    /// Shortfall of the cumulative gain below the rate is summable.
    GainShortfall,
    /// Surplus of the cumulative gain above the rate accumulates.
    GainSurplus,
    /// Cumulative gain keeps a positive margin over half the critical rate.
    GainMargin,
    /// Degenerate steps (slope times increment exactly one) stop occurring.
    ExcisionCount,
    /// State-to-reference drift-slope gap, normalized, decays.
    DriftMismatchDecay,
    /// State-to-reference noise-curvature gap, normalized, decays.
    CurvatureMismatchDecay,
}

impl ConditionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionId::DriftSign => "A",
            ConditionId::NoiseDensityBound => "B",
            ConditionId::LinearEnvelope => "I_i1",
            ConditionId::JumpEnvelopeSum => "I_i2",
            ConditionId::DriftInfimum => "I_ii",
            ConditionId::JumpDominated => "II_i",
            ConditionId::MixedInfimum => "II_ii",
            ConditionId::SqueezeGroup => "S1",
            ConditionId::SqueezeEnvelope => "S1_i1",
            ConditionId::SqueezeJumpSum => "S1_i2",
            ConditionId::SqueezeGrowth => "S1_ii",
            ConditionId::RelaxedGroup => "S2",
            ConditionId::RelaxedJumpSum => "S2_i",
            ConditionId::RelaxedGrowth => "S2_ii",
            ConditionId::RateIntegral => "R_2_2_3",
            ConditionId::RateNoiseIntegral => "R_2_2_4",
            ConditionId::RateDiscreteSum => "R_2_2_21",
            ConditionId::GainMeanBounded => "a_tilde",
            ConditionId::GainShortfall => "b_tilde",
            ConditionId::GainSurplus => "c_tilde",
            ConditionId::GainMargin => "bc_tilde",
            ConditionId::ExcisionCount => "e",
            ConditionId::DriftMismatchDecay => "f",
            ConditionId::CurvatureMismatchDecay => "g",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one condition audit.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub verdict: Verdict,
    /// 1-based step of the witness for a failure (or of the decisive
    /// crossing for a divergence-type hold); `None` when no single step
    /// decides.
    pub witness_step: Option<usize>,
    /// Probe amplitude at which a pointwise inequality broke, when relevant.
    pub witness_u: Option<f64>,
    /// Final value of the governing monitored quantity.
    pub monitored_final: f64,
    /// Threshold the classifier compared against.
    pub threshold: f64,
    /// Time horizon of the audited data.
    pub horizon: f64,
    /// Subsampled `(time, monitored value)` trajectory (at most 256 points).
    pub trajectory: Vec<(f64, f64)>,
    /// Free-form classifier detail.
    pub note: String,
}

// ---------------------------------------------------------------------------
// Classifier core
// ---------------------------------------------------------------------------

/// Log-spaced subsample of a node-indexed trajectory, always keeping the
/// first and last node.
fn subsample_trajectory(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    debug_assert_eq!(times.len(), values.len());
    let n = times.len();
    if n <= TRAJECTORY_SAMPLES {
        return times.iter().copied().zip(values.iter().copied()).collect();
    }
    let mut out = Vec::with_capacity(TRAJECTORY_SAMPLES);
    let mut last_idx = usize::MAX;
    let span = ((n - 1) as f64).ln();
    for j in 0..TRAJECTORY_SAMPLES {
        let frac = j as f64 / (TRAJECTORY_SAMPLES - 1) as f64;
        let idx = if j == 0 {
            0
        } else {
            (frac * span).exp().round() as usize
        }
        .min(n - 1);
        if idx != last_idx {
            out.push((times[idx], values[idx]));
            last_idx = idx;
        }
    }
    if last_idx != n - 1 {
        out.push((times[n - 1], values[n - 1]));
    }
    out
}

/// Index of the last node whose time is at most `t`, assuming sorted times.
fn node_at_or_before(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(mut i) => {
            while i + 1 < times.len() && times[i + 1] <= t {
                i += 1;
            }
            i
        }
        Err(0) => 0,
        Err(i) => i - 1,
    }
}

/// Share of the cumulative series accumulated in the last decade of time.
fn last_decade_share(times: &[f64], cum: &[f64]) -> f64 {
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return 0.0;
    }
    let horizon = *times.last().unwrap();
    let cut = node_at_or_before(times, horizon / 10.0);
    (total - cum[cut]) / total
}

pub(crate) struct SeriesClass {
    pub(crate) verdict: Verdict,
    pub(crate) witness_step: Option<usize>,
    pub(crate) threshold: f64,
    pub(crate) note: String,
}

/// Classify a nondecreasing cumulative series against "stays finite".
///
/// An identically zero series is trivially finite. A crossing of the hard
/// divergence level is a definite failure with that step as witness;
/// otherwise the last-decade share decides: under the flat share the tail
/// has died out (finite), above the divergent share mass keeps arriving
/// (failure, witnessed by the step where the final share's worth of mass
/// began), in between the evidence is inconclusive.
fn classify_required_finite(times: &[f64], cum: &[f64], th: &Thresholds) -> SeriesClass {
    let total = *cum.last().unwrap();
    if total <= NEGLIGIBLE_TOTAL {
        return SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.flat_tail_share,
            note: "monitored sum is zero up to rounding".into(),
        };
    }
    if let Some(i) = cum.iter().position(|&v| v > th.hard_divergence) {
        return SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(i),
            threshold: th.hard_divergence,
            note: format!(
                "sum crossed the hard divergence level {:.1e} at step {i}",
                th.hard_divergence
            ),
        };
    }
    let share = last_decade_share(times, cum);
    if share < th.flat_tail_share {
        SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.flat_tail_share,
            note: format!("last-decade share {share:.3e} below flat threshold"),
        }
    } else if share >= th.divergent_tail_share {
        let level = (1.0 - th.divergent_tail_share) * total;
        let witness = cum.iter().position(|&v| v > level);
        SeriesClass {
            verdict: Verdict::Fails,
            witness_step: witness,
            threshold: th.divergent_tail_share,
            note: format!("last-decade share {share:.3e} above divergent threshold"),
        }
    } else {
        SeriesClass {
            verdict: Verdict::Inconclusive,
            witness_step: None,
            threshold: th.flat_tail_share,
            note: format!("last-decade share {share:.3e} between thresholds"),
        }
    }
}

/// Classify a nondecreasing cumulative series against "grows without bound".
///
/// The mirror image of [`classify_required_finite`]: an identically zero
/// series cannot diverge (failure), a hard-level crossing or a fat tail is
/// evidence of divergence (hold, never proof), a flat tail means the series
/// has effectively converged (failure, witnessed by the step after which
/// nothing more arrived).
fn classify_required_divergent(times: &[f64], cum: &[f64], th: &Thresholds) -> SeriesClass {
    let total = *cum.last().unwrap();
    if total <= NEGLIGIBLE_TOTAL {
        return SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(times.len() - 1),
            threshold: th.divergent_tail_share,
            note: "monitored sum is zero up to rounding and cannot diverge".into(),
        };
    }
    if let Some(i) = cum.iter().position(|&v| v > th.hard_divergence) {
        return SeriesClass {
            verdict: Verdict::Holds,
            witness_step: Some(i),
            threshold: th.hard_divergence,
            note: format!(
                "sum crossed the hard divergence level {:.1e} at step {i}",
                th.hard_divergence
            ),
        };
    }
    let share = last_decade_share(times, cum);
    if share >= th.divergent_tail_share {
        SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.divergent_tail_share,
            note: format!("last-decade share {share:.3e}; still accumulating"),
        }
    } else if share < th.flat_tail_share {
        let level = (1.0 - th.flat_tail_share) * total;
        let witness = cum.iter().position(|&v| v >= level);
        SeriesClass {
            verdict: Verdict::Fails,
            witness_step: witness,
            threshold: th.flat_tail_share,
            note: format!("last-decade share {share:.3e}; sum has flattened"),
        }
    } else {
        SeriesClass {
            verdict: Verdict::Inconclusive,
            witness_step: None,
            threshold: th.divergent_tail_share,
            note: format!("last-decade share {share:.3e} between thresholds"),
        }
    }
}

/// Max of `|values|` over nodes whose time lies in `[lo, hi)`; the index of
/// the max is returned alongside.
fn window_abs_max(times: &[f64], values: &[f64], lo: f64, hi: f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut at = 0;
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t >= lo && (t < hi || (hi == *times.last().unwrap() && t <= hi)) && v.abs() > best {
            best = v.abs();
            at = i;
        }
    }
    if best == f64::NEG_INFINITY {
        (0.0, 0)
    } else {
        (best, at)
    }
}

/// Classify a node-indexed process against "eventually bounded" by comparing
/// the running max over the final decade of time with the decade before it.
fn classify_eventually_bounded(times: &[f64], values: &[f64], th: &Thresholds) -> SeriesClass {
    let horizon = *times.last().unwrap();
    let (late, late_at) = window_abs_max(times, values, horizon / 10.0, horizon);
    let (early, _) = window_abs_max(times, values, horizon / 100.0, horizon / 10.0);
    if late == 0.0 {
        return SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.bounded_ratio,
            note: "process vanishes over the final decade".into(),
        };
    }
    if early == 0.0 {
        return SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(late_at),
            threshold: th.bounded_ratio,
            note: "process grew from zero in the final decade".into(),
        };
    }
    let ratio = late / early;
    if ratio <= th.bounded_ratio {
        SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.bounded_ratio,
            note: format!("decade max ratio {ratio:.4} within bounded threshold"),
        }
    } else if ratio >= th.unbounded_ratio {
        SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(late_at),
            threshold: th.unbounded_ratio,
            note: format!("decade max ratio {ratio:.4} above unbounded threshold"),
        }
    } else {
        SeriesClass {
            verdict: Verdict::Inconclusive,
            witness_step: None,
            threshold: th.bounded_ratio,
            note: format!("decade max ratio {ratio:.4} between thresholds"),
        }
    }
}

/// Classify a nonnegative monitor against "decays to zero": the running max
/// over the final decade of time must drop below the previous decade's max.
pub(crate) fn classify_decaying(times: &[f64], values: &[f64], th: &Thresholds) -> SeriesClass {
    let horizon = *times.last().unwrap();
    let (late, late_at) = window_abs_max(times, values, horizon / 10.0, horizon);
    let (early, _) = window_abs_max(times, values, horizon / 100.0, horizon / 10.0);
    if late == 0.0 {
        return SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.decay_ratio,
            note: "monitor vanishes over the final decade".into(),
        };
    }
    if early == 0.0 {
        return SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(late_at),
            threshold: th.growth_ratio,
            note: "monitor grew from zero in the final decade".into(),
        };
    }
    let ratio = late / early;
    if ratio < th.decay_ratio {
        SeriesClass {
            verdict: Verdict::Holds,
            witness_step: None,
            threshold: th.decay_ratio,
            note: format!("decade max ratio {ratio:.4} below decay threshold"),
        }
    } else if ratio > th.growth_ratio {
        SeriesClass {
            verdict: Verdict::Fails,
            witness_step: Some(late_at),
            threshold: th.growth_ratio,
            note: format!("decade max ratio {ratio:.4} above growth threshold"),
        }
    } else {
        SeriesClass {
            verdict: Verdict::Inconclusive,
            witness_step: None,
            threshold: th.decay_ratio,
            note: format!("decade max ratio {ratio:.4} between thresholds"),
        }
    }
}

fn report_from_class(
    id: ConditionId,
    class: SeriesClass,
    times: &[f64],
    monitor: &[f64],
) -> ConditionReport {
    ConditionReport {
        id,
        verdict: class.verdict,
        witness_step: class.witness_step,
        witness_u: None,
        monitored_final: *monitor.last().unwrap(),
        threshold: class.threshold,
        horizon: *times.last().unwrap(),
        trajectory: subsample_trajectory(times, monitor),
        note: class.note,
    }
}

// ---------------------------------------------------------------------------
// Pointwise and envelope audits
// ---------------------------------------------------------------------------

/// Synthetic step context for state-free audits at clock value `t`:
/// positive unit observations stand in for any positive path.
fn probe_ctx(t: f64, dk: f64, jump: bool) -> StepCtx {
    StepCtx {
        step: 1,
        k_left: t,
        dk,
        jump,
        obs_prev: 1.0,
        obs_sum: t.max(1.0),
    }
}

/// Audit the restoring-drift sign condition: the drift vanishes at zero and
/// strictly opposes the state at every probed `(t, u)`.
///
/// The probe grid is taken literally; models whose drift changes sign beyond
/// a declared radius (see `ModelSpec::drift_sign_radius`) should be probed
/// inside that radius by the caller. A NaN drift value yields an
/// inconclusive verdict with the offending location.
pub fn check_drift_sign(
    model: &ModelSpec,
    u_grid: &[f64],
    t_grid: &[f64],
) -> Result<ConditionReport> {
    if u_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "drift sign audit needs nonempty probe grids".into(),
        ));
    }
    if u_grid.contains(&0.0) {
        return Err(Error::InvalidParameter(
            "drift sign audit probes must exclude 0".into(),
        ));
    }
    let jumpy = matches!(model.noise, crate::models::NoiseKind::GaltonWatson { .. });
    let mut worst = 0.0_f64;
    for (i, &t) in t_grid.iter().enumerate() {
        let ctx = probe_ctx(t, 1.0, jumpy);
        let at_zero = (model.drift)(&ctx, 0.0);
        if at_zero.is_nan() {
            return Ok(inconclusive_pointwise(
                ConditionId::DriftSign,
                i,
                0.0,
                t_grid,
                "drift evaluated to NaN at u = 0",
            ));
        }
        if at_zero != 0.0 {
            return Ok(pointwise_failure(
                ConditionId::DriftSign,
                i,
                0.0,
                at_zero,
                t_grid,
                "drift does not vanish at the root",
            ));
        }
        for &u in u_grid {
            let v = (model.drift)(&ctx, u) * u;
            if v.is_nan() {
                return Ok(inconclusive_pointwise(
                    ConditionId::DriftSign,
                    i,
                    u,
                    t_grid,
                    "drift evaluated to NaN",
                ));
            }
            if v >= 0.0 {
                return Ok(pointwise_failure(
                    ConditionId::DriftSign,
                    i,
                    u,
                    v,
                    t_grid,
                    "drift-state product is not negative",
                ));
            }
            worst = worst.max(v);
        }
    }
    Ok(ConditionReport {
        id: ConditionId::DriftSign,
        verdict: Verdict::Holds,
        witness_step: None,
        witness_u: None,
        monitored_final: worst,
        threshold: 0.0,
        horizon: *t_grid.last().unwrap(),
        trajectory: Vec::new(),
        note: format!(
            "drift-state product negative at all {} probes",
            u_grid.len() * t_grid.len()
        ),
    })
}

fn pointwise_failure(
    id: ConditionId,
    t_index: usize,
    u: f64,
    value: f64,
    t_grid: &[f64],
    what: &str,
) -> ConditionReport {
    ConditionReport {
        id,
        verdict: Verdict::Fails,
        witness_step: Some(t_index + 1),
        witness_u: Some(u),
        monitored_final: value,
        threshold: 0.0,
        horizon: *t_grid.last().unwrap(),
        trajectory: Vec::new(),
        note: format!("{what} at t = {:.6}, u = {u:.6}", t_grid[t_index]),
    }
}

fn inconclusive_pointwise(
    id: ConditionId,
    t_index: usize,
    u: f64,
    t_grid: &[f64],
    what: &str,
) -> ConditionReport {
    ConditionReport {
        id,
        verdict: Verdict::Inconclusive,
        witness_step: Some(t_index + 1),
        witness_u: Some(u),
        monitored_final: f64::NAN,
        threshold: 0.0,
        horizon: *t_grid.last().unwrap(),
        trajectory: Vec::new(),
        note: format!("{what} at t = {:.6}, u = {u:.6}", t_grid[t_index]),
    }
}

/// One-step drift contribution to the squared state: `2 H(u) u`, the
/// nonpositive "restoring" part under the sign condition.
fn v_minus(model: &ModelSpec, ctx: &StepCtx, u: f64) -> f64 {
    2.0 * (model.drift)(ctx, u) * u
}

/// One-step jump contribution to the squared state: `H(u)^2 dK` on jump
/// steps, zero otherwise.
fn v_plus(model: &ModelSpec, ctx: &StepCtx, u: f64) -> f64 {
    if ctx.jump {
        let h = (model.drift)(ctx, u);
        h * h * ctx.dk
    } else {
        0.0
    }
}

/// Audit the integrable noise-density bound: fit the per-step dominating
/// constant `max_u h(u,u)/(1+u^2)` and require its clock integral to stay
/// finite.
pub fn check_noise_density_bound(
    run: &RmRun,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<ConditionReport> {
    let model = run.model();
    let grid = run.grid();
    let n = grid.n_steps();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        let z = run.z().values()[i];
        let mut bound = 0.0_f64;
        for &u in u_grid.iter().chain(std::iter::once(&z)) {
            let h = (model.qc_density)(&ctx, u, u);
            bound = bound.max(h / (1.0 + u * u));
        }
        acc.add(bound * ctx.dk);
        cum.push(acc.value());
    }
    let class = classify_required_finite(grid.k(), &cum, th);
    Ok(report_from_class(
        ConditionId::NoiseDensityBound,
        class,
        grid.k(),
        &cum,
    ))
}

/// Log-uniform probe amplitudes on `[eps, 1/eps]`, both signs.
fn scan_band(eps: f64) -> Vec<f64> {
    let lo = eps.ln();
    let hi = (1.0 / eps).ln();
    let mut out = Vec::with_capacity(2 * SCAN_POINTS_PER_SIGN);
    for j in 0..SCAN_POINTS_PER_SIGN {
        let frac = j as f64 / (SCAN_POINTS_PER_SIGN - 1) as f64;
        let u = (lo + frac * (hi - lo)).exp();
        out.push(u);
        out.push(-u);
    }
    out
}

/// Audit the linear-envelope condition group on a completed run:
/// the fitted jump-step envelope, its squared jump sum, and the growth of
/// the restoring-force infimum over probe bands.
pub fn check_group_i(
    run: &RmRun,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    let model = run.model();
    let grid = run.grid();
    let n = grid.n_steps();
    let times = grid.k();

    // Fitted envelope C per jump step and its squared jump-step sum.
    let mut c_max = 0.0_f64;
    let mut envelope_ok = true;
    let mut sq_cum = Vec::with_capacity(n + 1);
    sq_cum.push(0.0);
    let mut sq_acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        if ctx.jump {
            let mut c = 0.0_f64;
            for &u in u_grid {
                let h = (model.drift)(&ctx, u).abs();
                c = c.max(h / (1.0 + u.abs()));
            }
            if !c.is_finite() {
                envelope_ok = false;
            }
            c_max = c_max.max(c);
            sq_acc.add(c * c * ctx.dk);
        }
        sq_cum.push(sq_acc.value());
    }

    let envelope_report = ConditionReport {
        id: ConditionId::LinearEnvelope,
        verdict: if envelope_ok {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        },
        witness_step: None,
        witness_u: None,
        monitored_final: c_max,
        threshold: 0.0,
        horizon: *times.last().unwrap(),
        trajectory: Vec::new(),
        note: if envelope_ok {
            "envelope fitted as max |H(u)|/(1+|u|) over the probe grid".into()
        } else {
            "fitted envelope is not finite".into()
        },
    };

    let sq_class = classify_required_finite(times, &sq_cum, th);
    let sq_report = report_from_class(ConditionId::JumpEnvelopeSum, sq_class, times, &sq_cum);

    let inf_report = infimum_growth_report(
        run,
        ConditionId::DriftInfimum,
        |ctx, u| v_minus(model, ctx, u).abs(),
        th,
    )?;

    Ok(vec![envelope_report, sq_report, inf_report])
}

/// Divergence audit of `inf_u integrand` accumulated over the clock, at the
/// two probe bands; the condition must show growth at every band, so the
/// most pessimistic band's verdict is reported.
fn infimum_growth_report(
    run: &RmRun,
    id: ConditionId,
    integrand: impl Fn(&StepCtx, f64) -> f64,
    th: &Thresholds,
) -> Result<ConditionReport> {
    let grid = run.grid();
    let n = grid.n_steps();
    let times = grid.k();
    let mut worst: Option<(f64, SeriesClass, Vec<f64>)> = None;
    for &eps in &SCAN_EPSILONS {
        let band = scan_band(eps);
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            let ctx = run.ctx(i);
            let mut inf = f64::INFINITY;
            for &u in &band {
                inf = inf.min(integrand(&ctx, u));
            }
            acc.add(inf * ctx.dk);
            cum.push(acc.value());
        }
        let class = classify_required_divergent(times, &cum, th);
        let replace = match &worst {
            None => true,
            // Keep the most pessimistic band: fails < inconclusive < holds.
            Some((_, prev, _)) => {
                rank_verdict(class.verdict) < rank_verdict(prev.verdict)
                    || (class.verdict == prev.verdict
                        && *cum.last().unwrap() < prev_total(worst.as_ref().unwrap()))
            }
        };
        if replace {
            worst = Some((eps, class, cum));
        }
    }
    let (eps, class, cum) = worst.unwrap();
    let mut report = report_from_class(id, class, times, &cum);
    report.witness_u = Some(eps);
    report.note = format!("band floor {eps:.2}: {}", report.note);
    Ok(report)
}

fn rank_verdict(v: Verdict) -> u8 {
    match v {
        Verdict::Fails => 0,
        Verdict::Inconclusive => 1,
        Verdict::Holds => 2,
    }
}

fn prev_total(entry: &(f64, SeriesClass, Vec<f64>)) -> f64 {
    *entry.2.last().unwrap()
}

/// Audit the jump-energy condition group on a completed run: the fitted
/// dominating process for the positive part of the one-step energy change,
/// and the mixed continuous/jump restoring infimum.
pub fn check_group_ii(
    run: &RmRun,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    let model = run.model();
    let grid = run.grid();
    let n = grid.n_steps();
    let times = grid.k();

    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        if ctx.jump {
            let mut d = 0.0_f64;
            for &u in u_grid {
                let w = v_minus(model, &ctx, u) + v_plus(model, &ctx, u);
                d = d.max(w.max(0.0) / (1.0 + u * u));
            }
            acc.add(d * ctx.dk);
        }
        cum.push(acc.value());
    }
    let dom_class = classify_required_finite(times, &cum, th);
    let dom_report = report_from_class(ConditionId::JumpDominated, dom_class, times, &cum);

    let mixed_report = infimum_growth_report(
        run,
        ConditionId::MixedInfimum,
        |ctx, u| {
            if ctx.jump {
                let w = v_minus(model, ctx, u) + v_plus(model, ctx, u);
                (-w).max(0.0)
            } else {
                v_minus(model, ctx, u).abs()
            }
        },
        th,
    )?;

    Ok(vec![dom_report, mixed_report])
}

/// Audit the two-sided linear squeeze groups on a completed run.
///
/// The squeeze bounds are fitted per step as the min and max of
/// `|H(u)|/|u|` over the probe grid. Reports cover both the strict group
/// (envelope, squared jump sum, lower-bound growth) and the relaxed group
/// for coarse jumps, plus one aggregate verdict per group.
pub fn check_squeeze_bounds(
    run: &RmRun,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    let model = run.model();
    let grid = run.grid();
    let n = grid.n_steps();
    let times = grid.k();

    // Per-step fitted squeeze bounds.
    let mut g_lower = Vec::with_capacity(n);
    let mut g_upper = Vec::with_capacity(n);
    let mut fit_ok = true;
    for i in 0..n {
        let ctx = run.ctx(i);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for &u in u_grid {
            let ratio = (model.drift)(&ctx, u).abs() / u.abs();
            if !ratio.is_finite() {
                fit_ok = false;
                continue;
            }
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        g_lower.push(if lo.is_finite() { lo } else { 0.0 });
        g_upper.push(hi);
    }

    let envelope_report = ConditionReport {
        id: ConditionId::SqueezeEnvelope,
        verdict: if fit_ok {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        },
        witness_step: None,
        witness_u: None,
        monitored_final: g_upper.iter().cloned().fold(0.0, f64::max),
        threshold: 0.0,
        horizon: *times.last().unwrap(),
        trajectory: Vec::new(),
        note: if fit_ok {
            "squeeze bounds fitted as min/max |H(u)|/|u| over the probe grid".into()
        } else {
            "squeeze ratio was not finite at some probe".into()
        },
    };

    // Squared upper bound over jump steps: must stay summable.
    let mut upper_sq = Vec::with_capacity(n + 1);
    upper_sq.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        if ctx.jump {
            acc.add(g_upper[i] * g_upper[i] * ctx.dk);
        }
        upper_sq.push(acc.value());
    }
    let upper_sq_class = classify_required_finite(times, &upper_sq, th);
    let upper_sq_report =
        report_from_class(ConditionId::SqueezeJumpSum, upper_sq_class, times, &upper_sq);

    // Lower bound accumulated over the whole clock: must diverge.
    let mut lower_cum = Vec::with_capacity(n + 1);
    lower_cum.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        acc.add(g_lower[i] * ctx.dk);
        lower_cum.push(acc.value());
    }
    let lower_class = classify_required_divergent(times, &lower_cum, th);
    let lower_report =
        report_from_class(ConditionId::SqueezeGrowth, lower_class, times, &lower_cum);

    // Relaxed group: oversized-jump excess must stay summable ...
    let mut excess = Vec::with_capacity(n + 1);
    excess.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        if ctx.jump {
            let over = (-2.0 + g_upper[i] * ctx.dk).max(0.0);
            acc.add(g_upper[i] * over * ctx.dk);
        }
        excess.push(acc.value());
    }
    let excess_class = classify_required_finite(times, &excess, th);
    let excess_report =
        report_from_class(ConditionId::RelaxedJumpSum, excess_class, times, &excess);

    // ... while the mixed restoring mass still diverges.
    let mut mass = Vec::with_capacity(n + 1);
    mass.push(0.0);
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        let ctx = run.ctx(i);
        let weight = if ctx.jump {
            (-(-2.0 + g_upper[i] * ctx.dk)).max(0.0)
        } else {
            2.0
        };
        acc.add(g_lower[i] * weight * ctx.dk);
        mass.push(acc.value());
    }
    let mass_class = classify_required_divergent(times, &mass, th);
    let mass_report = report_from_class(ConditionId::RelaxedGrowth, mass_class, times, &mass);

    let strict_parts = [
        envelope_report.verdict,
        upper_sq_report.verdict,
        lower_report.verdict,
    ];
    let relaxed_parts = [
        envelope_report.verdict,
        excess_report.verdict,
        mass_report.verdict,
    ];
    let aggregate = |parts: &[Verdict], id: ConditionId, horizon: f64| ConditionReport {
        id,
        verdict: if parts.iter().any(|&v| v == Verdict::Fails) {
            Verdict::Fails
        } else if parts.iter().all(|&v| v == Verdict::Holds) {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        },
        witness_step: None,
        witness_u: None,
        monitored_final: f64::NAN,
        threshold: 0.0,
        horizon,
        trajectory: Vec::new(),
        note: "aggregate of the group's sub-conditions".into(),
    };
    let horizon = *times.last().unwrap();
    let strict_aggregate = aggregate(&strict_parts, ConditionId::SqueezeGroup, horizon);
    let relaxed_aggregate = aggregate(&relaxed_parts, ConditionId::RelaxedGroup, horizon);

    Ok(vec![
        envelope_report,
        upper_sq_report,
        lower_report,
        strict_aggregate,
        excess_report,
        mass_report,
        relaxed_aggregate,
    ])
}

// ---------------------------------------------------------------------------
// Rate conditions
// ---------------------------------------------------------------------------

/// Raw inputs to the rate-condition audits: a clock grid, the per-step
/// drift slope evaluated at the running state, the (right-node) values of
/// the target rate process with `gamma[0] = 1` by convention, and optionally
/// the per-step noise density at the running state.
#[derive(Debug, Clone, Copy)]
pub struct RateData<'a> {
    pub grid: &'a TimeGrid,
    pub beta_z: &'a [f64],
    pub gamma: &'a [f64],
    pub h_zz: Option<&'a [f64]>,
}

impl RateData<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.grid.n_steps();
        if self.beta_z.len() != n {
            return Err(Error::ShapeMismatch {
                context: "rate data slopes vs grid steps",
                left: self.beta_z.len(),
                right: n,
            });
        }
        if self.gamma.len() != n + 1 {
            return Err(Error::ShapeMismatch {
                context: "rate data gamma nodes vs grid nodes",
                left: self.gamma.len(),
                right: n + 1,
            });
        }
        if let Some(h) = self.h_zz {
            if h.len() != n {
                return Err(Error::ShapeMismatch {
                    context: "rate data noise density vs grid steps",
                    left: h.len(),
                    right: n,
                });
            }
        }
        Ok(())
    }
}

/// Audit the rate-transfer conditions for a target rate `gamma^delta`.
///
/// `delta` is the rate exponent under audit and `delta0` the critical
/// exponent; the audit requires `0 < delta < delta0 <= 1`. Produces, in
/// order: the exponential-comparison integral, the rate-weighted noise sum
/// (when a noise density is supplied), the discrete-time transfer sum, and
/// the four cumulative-gain conditions (bounded mean, summable shortfall,
/// accumulating surplus, positive margin over `delta0/2`).
pub fn check_rate_conditions_data(
    data: &RateData<'_>,
    delta: f64,
    delta0: f64,
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    if !(0.0 < delta && delta < delta0 && delta0 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rate audit requires 0 < delta < delta0 <= 1 (got delta = {delta}, delta0 = {delta0})"
        )));
    }
    data.validate()?;
    let grid = data.grid;
    let n = grid.n_steps();
    let times = grid.k();
    let dk = grid.dk();
    let jump = grid.jump();
    let gamma = data.gamma;

    let mut reports = Vec::with_capacity(7);

    // Exponential-comparison integral: per step, the rate that turns the
    // reciprocal stochastic exponential into gamma^delta, compared with the
    // squared one-step contraction.
    {
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            let (gp, gc) = (gamma[i], gamma[i + 1]);
            let term = if gp > 0.0 && gc > 0.0 && dk[i] > 0.0 {
                let ratio = gp / gc;
                let r = if jump[i] {
                    (1.0 - ratio.powf(delta)) / dk[i]
                } else {
                    delta * (gc / gp).ln() / dk[i]
                };
                let b = data.beta_z[i];
                let bracket = r - 2.0 * b + b * b * dk[i];
                ratio.powf(-delta) * bracket.max(0.0) * dk[i]
            } else {
                0.0
            };
            acc.add(term);
            cum.push(acc.value());
        }
        let class = classify_required_finite(times, &cum, th);
        reports.push(report_from_class(
            ConditionId::RateIntegral,
            class,
            times,
            &cum,
        ));
    }

    // Rate-weighted noise sum.
    if let Some(h) = data.h_zz {
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            let g = gamma[i + 1].max(0.0);
            acc.add(g.powf(delta) * h[i] * dk[i]);
            cum.push(acc.value());
        }
        let class = classify_required_finite(times, &cum, th);
        reports.push(report_from_class(
            ConditionId::RateNoiseIntegral,
            class,
            times,
            &cum,
        ));
    }

    // Discrete-time transfer sum over the rate's own growth measure.
    {
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            let dgamma = gamma[i + 1] - gamma[i];
            let term = if dgamma > 0.0 && gamma[i + 1] > 0.0 {
                // gamma * beta / g with g = dgamma/dK.
                let scaled = gamma[i + 1] * data.beta_z[i] * dk[i] / dgamma;
                (delta - scaled).max(0.0) * dgamma / gamma[i + 1]
            } else {
                0.0
            };
            acc.add(term);
            cum.push(acc.value());
        }
        let class = classify_required_finite(times, &cum, th);
        reports.push(report_from_class(
            ConditionId::RateDiscreteSum,
            class,
            times,
            &cum,
        ));
    }

    // Normalized cumulative gain A_t = (1/gamma_t) * sum of beta gamma dK,
    // evaluated at every node (A_0 = 0).
    let mut a_nodes = Vec::with_capacity(n + 1);
    a_nodes.push(0.0);
    let mut gain_acc = NeumaierSum::new();
    for i in 0..n {
        gain_acc.add(data.beta_z[i] * gamma[i + 1] * dk[i]);
        let g = gamma[i + 1];
        a_nodes.push(if g > 0.0 { gain_acc.value() / g } else { 0.0 });
    }

    {
        let class = classify_eventually_bounded(times, &a_nodes, th);
        reports.push(report_from_class(
            ConditionId::GainMeanBounded,
            class,
            times,
            &a_nodes,
        ));
    }

    // Shortfall and surplus of the (predictable) cumulative gain against
    // delta, weighted by the rate's relative growth.
    {
        let mut short = Vec::with_capacity(n + 1);
        let mut surplus = Vec::with_capacity(n + 1);
        short.push(0.0);
        surplus.push(0.0);
        let mut short_acc = NeumaierSum::new();
        let mut surplus_acc = NeumaierSum::new();
        for i in 0..n {
            let dgamma = gamma[i + 1] - gamma[i];
            if dgamma > 0.0 && gamma[i + 1] > 0.0 {
                let weight = dgamma / gamma[i + 1];
                let gap = a_nodes[i] - delta;
                short_acc.add((-gap).max(0.0) * weight);
                surplus_acc.add(gap.max(0.0) * weight);
            }
            short.push(short_acc.value());
            surplus.push(surplus_acc.value());
        }
        let short_class = classify_required_finite(times, &short, th);
        reports.push(report_from_class(
            ConditionId::GainShortfall,
            short_class,
            times,
            &short,
        ));
        let surplus_class = classify_required_divergent(times, &surplus, th);
        reports.push(report_from_class(
            ConditionId::GainSurplus,
            surplus_class,
            times,
            &surplus,
        ));
    }

    // Positive margin of the cumulative gain over delta0/2 on the final
    // half of the horizon.
    {
        let horizon = *times.last().unwrap();
        let margin: Vec<f64> = a_nodes.iter().map(|&a| a - delta0 / 2.0).collect();
        let mut min_val = f64::INFINITY;
        let mut min_at = 0;
        for (i, (&t, &m)) in times.iter().zip(&margin).enumerate() {
            if t >= horizon / 2.0 && m < min_val {
                min_val = m;
                min_at = i;
            }
        }
        let ok = min_val > th.eventual_floor;
        reports.push(ConditionReport {
            id: ConditionId::GainMargin,
            verdict: if ok { Verdict::Holds } else { Verdict::Fails },
            witness_step: if ok { None } else { Some(min_at) },
            witness_u: None,
            monitored_final: *margin.last().unwrap(),
            threshold: th.eventual_floor,
            horizon,
            trajectory: subsample_trajectory(times, &margin),
            note: format!("final-half margin minimum {min_val:.3e}"),
        });
    }

    Ok(reports)
}

/// Rate-condition audit on a completed run: slopes and noise densities are
/// taken at the run's own states, the rate process from the model.
pub fn check_rate_conditions(
    run: &RmRun,
    delta: f64,
    delta0: f64,
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    let model = run.model();
    let n = run.grid().n_steps();
    let mut beta_z = Vec::with_capacity(n);
    let mut h_zz = Vec::with_capacity(n);
    for i in 0..n {
        let ctx = run.ctx(i);
        let z = run.z().values()[i];
        beta_z.push((model.beta_field)(&ctx, z));
        h_zz.push((model.qc_density)(&ctx, z, z));
    }
    let gamma = run.gamma_path();
    let data = RateData {
        grid: run.grid(),
        beta_z: &beta_z,
        gamma: &gamma,
        h_zz: Some(&h_zz),
    };
    check_rate_conditions_data(&data, delta, delta0, th)
}

/// Run every structural condition audit on a completed run, in canonical
/// report order: drift sign, noise-density bound, the linear-envelope
/// group, the jump-energy group, and both squeeze groups.
///
/// Drift-sign probes outside the model's guaranteed sign radius are
/// dropped; the envelope fits use the full probe grid.
pub fn audit_conditions(
    run: &RmRun,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<Vec<ConditionReport>> {
    let model = run.model();
    let radius = model.drift_sign_radius.unwrap_or(f64::INFINITY);
    let sign_grid: Vec<f64> = u_grid
        .iter()
        .copied()
        .filter(|u| u.abs() < radius)
        .collect();
    if sign_grid.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no drift-sign probes inside the model's guaranteed radius {radius}"
        )));
    }
    let times = run.grid().k();
    let stride = (times.len() / 64).max(1);
    let t_probes: Vec<f64> = times.iter().step_by(stride).copied().collect();
    let mut reports = vec![check_drift_sign(model, &sign_grid, &t_probes)?];
    reports.push(check_noise_density_bound(run, u_grid, th)?);
    reports.extend(check_group_i(run, u_grid, th)?);
    reports.extend(check_group_ii(run, u_grid, th)?);
    reports.extend(check_squeeze_bounds(run, u_grid, th)?);
    Ok(reports)
}

/// Pathwise rate monitor `gamma_t^delta * z_t^2` on the run's grid.
pub fn rate_monitor(run: &RmRun, gamma: &[f64], delta: f64) -> Result<SamplePath> {
    let grid = run.grid();
    if gamma.len() != grid.n_steps() + 1 {
        return Err(Error::ShapeMismatch {
            context: "rate monitor gamma nodes vs grid nodes",
            left: gamma.len(),
            right: grid.n_steps() + 1,
        });
    }
    let values: Vec<f64> = run
        .z()
        .values()
        .iter()
        .zip(gamma)
        .map(|(&z, &g)| g.max(0.0).powf(delta) * z * z)
        .collect();
    SamplePath::new(grid.clone(), values, run.divergence())
}

/// Decay verdict for a nonnegative monitor path: compares the running max
/// over the final decade of time against the decade before it.
pub fn decade_decay_verdict(path: &SamplePath, th: &Thresholds) -> Verdict {
    classify_decaying(path.grid().k(), path.values(), th).verdict
}

/// Decay report (same classification as [`decade_decay_verdict`], full
/// evidence) used by the expansion audits.
pub(crate) fn decay_report(
    id: ConditionId,
    times: &[f64],
    values: &[f64],
    th: &Thresholds,
) -> ConditionReport {
    let class = classify_decaying(times, values, th);
    report_from_class(id, class, times, values)
}

/// Finiteness report over an explicit cumulative series, for audits that
/// build their own monitor (expansion excision counting).
pub(crate) fn finite_report(
    id: ConditionId,
    times: &[f64],
    cum: &[f64],
    th: &Thresholds,
) -> ConditionReport {
    let class = classify_required_finite(times, cum, th);
    report_from_class(id, class, times, cum)
}
