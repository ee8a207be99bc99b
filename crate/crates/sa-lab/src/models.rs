//! Model registry: named stochastic-approximation procedures as bundles of
//! pure per-step evaluators.
//!
//! A [`ModelSpec`] describes one procedure through closures evaluated at a
//! [`StepCtx`]: the drift field `H(u)`, the noise coefficient `l(u)`
//! multiplying the martingale increments, the conditional-variance density
//! `h(u, v)` of the noise field per unit of clock, the local drift slope
//! `beta` (and its state-dependent version `beta_field`), the rate
//! normalizer `gamma`, and the averaging weight `g`. Evaluators are indexed
//! by grid step and receive only left-endpoint information, so
//! predictability is enforced structurally: nothing about the current
//! step's noise can leak into a coefficient.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand_chacha::rand_core::RngCore;

use crate::constants::OBSERVATION_CAP;
use crate::error::{Error, Result};
use crate::rng::poisson;

/// Everything an evaluator may know at one grid step: the 1-based step
/// index, the left endpoint of the clock, the step's clock increment and
/// jump flag, and -- for observation-driven models -- the most recent
/// observation and the running observation sum.
///
/// All fields describe information available strictly before the step's
/// noise is drawn.
#[derive(Debug, Clone, Copy)]
pub struct StepCtx {
    /// 1-based step index.
    pub step: usize,
    /// Clock value at the left endpoint of the step.
    pub k_left: f64,
    /// Clock increment of the step.
    pub dk: f64,
    /// Whether the step is a jump of the clock.
    pub jump: bool,
    /// Previous observation (branching models); 0 otherwise.
    pub obs_prev: f64,
    /// Running sum of observations up to and including `obs_prev`;
    /// 0 for models without observations.
    pub obs_sum: f64,
}

/// Scalar field of one state variable: `(ctx, u) -> value`.
pub type Field1 = Arc<dyn Fn(&StepCtx, f64) -> f64 + Send + Sync>;
/// Scalar field of two state variables: `(ctx, u, v) -> value`.
pub type Field2 = Arc<dyn Fn(&StepCtx, f64, f64) -> f64 + Send + Sync>;
/// Per-step scalar: `(ctx) -> value`.
pub type Field0 = Arc<dyn Fn(&StepCtx) -> f64 + Send + Sync>;

/// How the driving martingale increments are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Increments `sqrt(dK) * N(0,1)`; quadratic characteristic `dK`.
    Gaussian,
    /// Branching-process observations: each step draws
    /// `X_i = 1 + Poisson(theta * X_{i-1})` and the martingale increment is
    /// the centered, normalized estimation error.
    GaltonWatson { theta: f64 },
}

/// Registry model names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelName {
    LinearStandard,
    LinearSlowGain,
    RmSlowGain,
    GaltonWatson,
    DeterministicRegression,
    Custom,
}

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::LinearStandard => "linear_standard",
            ModelName::LinearSlowGain => "linear_slow_gain",
            ModelName::RmSlowGain => "rm_slow_gain",
            ModelName::GaltonWatson => "galton_watson",
            ModelName::DeterministicRegression => "deterministic_regression",
            ModelName::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<ModelName> {
        Ok(match name {
            "linear_standard" => ModelName::LinearStandard,
            "linear_slow_gain" => ModelName::LinearSlowGain,
            "rm_slow_gain" => ModelName::RmSlowGain,
            "galton_watson" => ModelName::GaltonWatson,
            "deterministic_regression" => ModelName::DeterministicRegression,
            "custom" => ModelName::Custom,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model '{other}'; expected one of linear_standard, \
                     linear_slow_gain, rm_slow_gain, galton_watson, \
                     deterministic_regression, custom"
                )))
            }
        })
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registry model plus its parameter map.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelId {
    pub name: ModelName,
    pub params: BTreeMap<String, f64>,
}

impl ModelId {
    pub fn new(name: ModelName) -> ModelId {
        ModelId {
            name,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> ModelId {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// One stochastic-approximation procedure, fully described by pure
/// evaluators plus the noise mechanism and the initial state.
#[derive(Clone)]
pub struct ModelSpec {
    pub id: ModelId,
    /// Initial state `z_0`.
    pub z0: f64,
    pub noise: NoiseKind,
    /// Drift field `H(u)`; must vanish at `u = 0` and satisfy
    /// `H(u) u < 0` away from 0 (within `drift_sign_radius`).
    pub drift: Field1,
    /// Noise coefficient `l(u)` multiplying the martingale increments.
    pub noise_coeff: Field1,
    /// Conditional-variance density of the noise field per unit of clock:
    /// `h(u, v) = d<M(u), M(v)> / dK`.
    pub qc_density: Field2,
    /// Local drift slope at 0: `beta = -lim_{u->0} H(u)/u`.
    pub beta: Field0,
    /// State-dependent drift slope: `beta_field(u) = -H(u)/u` for `u != 0`,
    /// continued by `beta` at 0.
    pub beta_field: Field1,
    /// Rate normalizer evaluated at the step's right node; by convention
    /// its value at node 0 is 1 and it is nondecreasing along the grid.
    pub gamma: Field0,
    /// Averaging weight `g` (left endpoint) for the exponential-weight
    /// average; the default plain weight is `1/(1 + K)`.
    pub weight_g: Field0,
    /// Largest `|u|` up to which the strict drift-sign inequality is
    /// guaranteed by the model's algebra; `None` means everywhere.
    pub drift_sign_radius: Option<f64>,
    /// Whether the model's parameters are known analytically to lie inside
    /// (`Some(true)`) or outside (`Some(false)`) the regime where the
    /// normalized-remainder expansion is guaranteed; `None` when unknown.
    pub expansion_guarantee: Option<bool>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("id", &self.id)
            .field("z0", &self.z0)
            .field("noise", &self.noise)
            .field("drift_sign_radius", &self.drift_sign_radius)
            .field("expansion_guarantee", &self.expansion_guarantee)
            .finish_non_exhaustive()
    }
}

/// Read a parameter map against the list of allowed names with defaults,
/// rejecting unknown keys.
fn read_params(
    model: &str,
    map: &BTreeMap<String, f64>,
    allowed: &[(&str, f64)],
) -> Result<Vec<f64>> {
    for key in map.keys() {
        if !allowed.iter().any(|(name, _)| name == key) {
            let names: Vec<&str> = allowed.iter().map(|(n, _)| *n).collect();
            return Err(Error::InvalidParameter(format!(
                "unknown parameter '{key}' for model {model}; expected one of {}",
                names.join(", ")
            )));
        }
    }
    Ok(allowed
        .iter()
        .map(|(name, default)| map.get(*name).copied().unwrap_or(*default))
        .collect())
}

fn require(ok: bool, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(message.into()))
    }
}

const LINEAR_STANDARD_PARAMS: &[(&str, f64)] =
    &[("alpha", 1.0), ("beta", 1.0), ("sigma", 1.0), ("z0", 0.0)];
const LINEAR_SLOW_GAIN_PARAMS: &[(&str, f64)] = &[
    ("alpha", 1.0),
    ("beta", 1.0),
    ("sigma", 1.0),
    ("r", 0.9),
    ("z0", 0.0),
];
const RM_SLOW_GAIN_PARAMS: &[(&str, f64)] = &[
    ("alpha", 0.5),
    ("beta", 1.0),
    ("sigma", 1.0),
    ("r", 0.9),
    ("c", 0.1),
    ("z0", 0.0),
];
const GALTON_WATSON_PARAMS: &[(&str, f64)] = &[("theta", 0.5), ("theta0", 0.0)];
const DETERMINISTIC_REGRESSION_PARAMS: &[(&str, f64)] = &[
    ("b", -1.0),
    ("a0", 1.0),
    ("p", 1.0),
    ("sigma", 1.0),
    ("z0", 0.0),
];

pub(crate) fn param_table(name: ModelName) -> Result<&'static [(&'static str, f64)]> {
    match name {
        ModelName::LinearStandard => Ok(LINEAR_STANDARD_PARAMS),
        ModelName::LinearSlowGain => Ok(LINEAR_SLOW_GAIN_PARAMS),
        ModelName::RmSlowGain => Ok(RM_SLOW_GAIN_PARAMS),
        ModelName::GaltonWatson => Ok(GALTON_WATSON_PARAMS),
        ModelName::DeterministicRegression => Ok(DETERMINISTIC_REGRESSION_PARAMS),
        ModelName::Custom => Err(Error::InvalidParameter(
            "custom model has no registry entry; construct a ModelSpec directly".into(),
        )),
    }
}

/// Effective parameter values for a registry id: declared defaults overlaid
/// with the id's explicit entries. Rejects unknown keys exactly as
/// [`build_model`] does, without constructing the evaluators.
pub fn resolved_params(id: &ModelId) -> Result<BTreeMap<String, f64>> {
    let table = param_table(id.name)?;
    let values = read_params(id.name.as_str(), &id.params, table)?;
    Ok(table
        .iter()
        .zip(values)
        .map(|((name, _), value)| (name.to_string(), value))
        .collect())
}

/// Build a registry model from its id, validating parameter ranges.
///
/// The `custom` name is rejected here: custom procedures are built by
/// constructing a [`ModelSpec`] directly.
pub fn build_model(id: &ModelId) -> Result<ModelSpec> {
    match id.name {
        ModelName::LinearStandard => build_linear_standard(id),
        ModelName::LinearSlowGain => build_linear_slow_gain(id),
        ModelName::RmSlowGain => build_rm_slow_gain(id),
        ModelName::GaltonWatson => build_galton_watson(id),
        ModelName::DeterministicRegression => build_deterministic_regression(id),
        ModelName::Custom => Err(Error::InvalidParameter(
            "custom model has no registry entry; construct a ModelSpec directly".into(),
        )),
    }
}

/// Shared plain averaging weight `g = 1/(1 + K)`.
fn plain_weight() -> Field0 {
    Arc::new(|ctx: &StepCtx| 1.0 / (1.0 + ctx.k_left))
}

/// Linear procedure with gain decaying like the reciprocal clock:
/// drift slope `alpha*beta/(1+K)`, noise coefficient `alpha*sigma/(1+K)`.
fn build_linear_standard(id: &ModelId) -> Result<ModelSpec> {
    let p = read_params("linear_standard", &id.params, LINEAR_STANDARD_PARAMS)?;
    let (alpha, beta, sigma, z0) = (p[0], p[1], p[2], p[3]);
    require(
        alpha * beta > 0.0,
        format!("linear_standard requires αβ > 0 (got αβ = {})", alpha * beta),
    )?;
    require(
        2.0 * alpha * beta > 1.0,
        format!(
            "linear_standard requires 2αβ > 1 (got 2αβ = {})",
            2.0 * alpha * beta
        ),
    )?;
    require(sigma >= 0.0, format!("linear_standard requires σ ≥ 0 (got {sigma})"))?;
    let ab = alpha * beta;
    let asg = alpha * sigma;
    Ok(ModelSpec {
        id: id.clone(),
        z0,
        noise: NoiseKind::Gaussian,
        drift: Arc::new(move |ctx, u| -ab / (1.0 + ctx.k_left) * u),
        noise_coeff: Arc::new(move |ctx, _u| asg / (1.0 + ctx.k_left)),
        qc_density: Arc::new(move |ctx, _u, _v| {
            let l = asg / (1.0 + ctx.k_left);
            l * l
        }),
        beta: Arc::new(move |ctx| ab / (1.0 + ctx.k_left)),
        beta_field: Arc::new(move |ctx, _u| ab / (1.0 + ctx.k_left)),
        gamma: Arc::new(|ctx| 1.0 + ctx.k_left + ctx.dk),
        weight_g: plain_weight(),
        drift_sign_radius: None,
        expansion_guarantee: Some(true),
    })
}

/// Linear procedure with slowly varying gains: slope and noise coefficient
/// decay like `(1+K)^{-r}` with `1/2 < r < 1`.
fn build_linear_slow_gain(id: &ModelId) -> Result<ModelSpec> {
    let p = read_params("linear_slow_gain", &id.params, LINEAR_SLOW_GAIN_PARAMS)?;
    let (alpha, beta, sigma, r, z0) = (p[0], p[1], p[2], p[3], p[4]);
    require(
        0.5 < r && r < 1.0,
        format!("linear_slow_gain requires 1/2<r<1 (got r = {r})"),
    )?;
    require(alpha > 0.0, format!("linear_slow_gain requires α > 0 (got {alpha})"))?;
    require(beta > 0.0, format!("linear_slow_gain requires β > 0 (got {beta})"))?;
    require(sigma >= 0.0, format!("linear_slow_gain requires σ ≥ 0 (got {sigma})"))?;
    let ab = alpha * beta;
    let asg = alpha * sigma;
    Ok(ModelSpec {
        id: id.clone(),
        z0,
        noise: NoiseKind::Gaussian,
        drift: Arc::new(move |ctx, u| -ab * (1.0 + ctx.k_left).powf(-r) * u),
        noise_coeff: Arc::new(move |ctx, _u| asg * (1.0 + ctx.k_left).powf(-r)),
        qc_density: Arc::new(move |ctx, _u, _v| {
            let l = asg * (1.0 + ctx.k_left).powf(-r);
            l * l
        }),
        beta: Arc::new(move |ctx| ab * (1.0 + ctx.k_left).powf(-r)),
        beta_field: Arc::new(move |ctx, _u| ab * (1.0 + ctx.k_left).powf(-r)),
        gamma: Arc::new(move |ctx| (1.0 + ctx.k_left + ctx.dk).powf(r)),
        weight_g: plain_weight(),
        drift_sign_radius: None,
        expansion_guarantee: Some(true),
    })
}

/// Nonlinear procedure with slowly varying gains: drift
/// `-alpha (beta u - c u^2) / (1+K)^r`. The quadratic correction keeps the
/// regression function within `O(u^2)` of linear near 0; the strict
/// drift-sign inequality is guaranteed only for `|u| < beta/c`, which the
/// spec records in `drift_sign_radius`.
fn build_rm_slow_gain(id: &ModelId) -> Result<ModelSpec> {
    let p = read_params("rm_slow_gain", &id.params, RM_SLOW_GAIN_PARAMS)?;
    let (alpha, beta, sigma, r, c, z0) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    require(
        0.5 < r && r < 1.0,
        format!("rm_slow_gain requires 1/2<r<1 (got r = {r})"),
    )?;
    require(alpha > 0.0, format!("rm_slow_gain requires α > 0 (got {alpha})"))?;
    require(beta > 0.0, format!("rm_slow_gain requires β > 0 (got {beta})"))?;
    require(sigma >= 0.0, format!("rm_slow_gain requires σ ≥ 0 (got {sigma})"))?;
    require(c >= 0.0, format!("rm_slow_gain requires c ≥ 0 (got {c})"))?;
    let asg = alpha * sigma;
    let radius = if c > 0.0 { Some(beta / c) } else { None };
    Ok(ModelSpec {
        id: id.clone(),
        z0,
        noise: NoiseKind::Gaussian,
        drift: Arc::new(move |ctx, u| {
            -alpha * (beta * u - c * u * u) * (1.0 + ctx.k_left).powf(-r)
        }),
        noise_coeff: Arc::new(move |ctx, _u| asg * (1.0 + ctx.k_left).powf(-r)),
        qc_density: Arc::new(move |ctx, _u, _v| {
            let l = asg * (1.0 + ctx.k_left).powf(-r);
            l * l
        }),
        beta: Arc::new(move |ctx| alpha * beta * (1.0 + ctx.k_left).powf(-r)),
        beta_field: Arc::new(move |ctx, u| alpha * (beta - c * u) * (1.0 + ctx.k_left).powf(-r)),
        gamma: Arc::new(move |ctx| (1.0 + ctx.k_left + ctx.dk).powf(r)),
        weight_g: plain_weight(),
        drift_sign_radius: radius,
        expansion_guarantee: Some(r > 0.8),
    })
}

/// Recursive offspring-mean estimation for a branching process with unit
/// immigration. The state is the estimation error; observations enter
/// through the context. The first step always has slope-times-increment
/// exactly 1 and is excised by the normalization machinery downstream.
fn build_galton_watson(id: &ModelId) -> Result<ModelSpec> {
    let p = read_params("galton_watson", &id.params, GALTON_WATSON_PARAMS)?;
    let (theta, theta0) = (p[0], p[1]);
    require(theta > 0.0, format!("galton_watson requires θ > 0 (got {theta})"))?;
    Ok(ModelSpec {
        id: id.clone(),
        z0: theta0 - theta,
        noise: NoiseKind::GaltonWatson { theta },
        drift: Arc::new(|ctx, u| -u * ctx.obs_prev / ctx.obs_sum),
        noise_coeff: Arc::new(|_ctx, _u| 1.0),
        qc_density: Arc::new(move |ctx, _u, _v| theta * ctx.obs_prev / (ctx.obs_sum * ctx.obs_sum)),
        beta: Arc::new(|ctx| ctx.obs_prev / ctx.obs_sum),
        beta_field: Arc::new(|ctx, _u| ctx.obs_prev / ctx.obs_sum),
        gamma: Arc::new(|ctx| ctx.obs_sum.max(1.0)),
        weight_g: plain_weight(),
        drift_sign_radius: None,
        expansion_guarantee: Some(true),
    })
}

/// Linear regression-function procedure with a decaying deterministic gain
/// `a0 (1+K)^{-p}`: drift `b * gain * u` with `b < 0`, noise coefficient
/// `sigma * gain`.
fn build_deterministic_regression(id: &ModelId) -> Result<ModelSpec> {
    let p = read_params(
        "deterministic_regression",
        &id.params,
        DETERMINISTIC_REGRESSION_PARAMS,
    )?;
    let (b, a0, pw, sigma, z0) = (p[0], p[1], p[2], p[3], p[4]);
    require(b < 0.0, format!("deterministic_regression requires b < 0 (got {b})"))?;
    require(a0 > 0.0, format!("deterministic_regression requires a0 > 0 (got {a0})"))?;
    require(pw >= 0.0, format!("deterministic_regression requires p ≥ 0 (got {pw})"))?;
    require(sigma >= 0.0, format!("deterministic_regression requires σ ≥ 0 (got {sigma})"))?;
    Ok(ModelSpec {
        id: id.clone(),
        z0,
        noise: NoiseKind::Gaussian,
        drift: Arc::new(move |ctx, u| b * a0 * (1.0 + ctx.k_left).powf(-pw) * u),
        noise_coeff: Arc::new(move |ctx, _u| sigma * a0 * (1.0 + ctx.k_left).powf(-pw)),
        qc_density: Arc::new(move |ctx, _u, _v| {
            let l = sigma * a0 * (1.0 + ctx.k_left).powf(-pw);
            l * l
        }),
        beta: Arc::new(move |ctx| -b * a0 * (1.0 + ctx.k_left).powf(-pw)),
        beta_field: Arc::new(move |ctx, _u| -b * a0 * (1.0 + ctx.k_left).powf(-pw)),
        gamma: Arc::new(move |ctx| (1.0 + ctx.k_left + ctx.dk).powf(pw)),
        weight_g: plain_weight(),
        drift_sign_radius: None,
        expansion_guarantee: Some(true),
    })
}

/// One observation step of the branching process with unit immigration:
/// `1 + Poisson(theta * x_prev)`, capped so that long supercritical runs
/// stay representable. The cap freezes the observation sequence without
/// breaking the estimator identity, which holds for any positive sequence.
pub fn gw_transition(theta: f64, x_prev: f64, rng: &mut impl RngCore) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "galton_watson requires θ > 0 (got {theta})"
        )));
    }
    if !(x_prev >= 0.0) || !x_prev.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "observation must be a nonnegative finite count, got {x_prev}"
        )));
    }
    let next = 1.0 + poisson(rng, theta * x_prev);
    Ok(next.min(OBSERVATION_CAP))
}

/// All registry names that `build_model` accepts, in display order.
pub fn registry_names() -> [ModelName; 5] {
    [
        ModelName::LinearStandard,
        ModelName::LinearSlowGain,
        ModelName::RmSlowGain,
        ModelName::GaltonWatson,
        ModelName::DeterministicRegression,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx_at(step: usize, k_left: f64) -> StepCtx {
        StepCtx {
            step,
            k_left,
            dk: 0.01,
            jump: false,
            obs_prev: 3.0,
            obs_sum: 7.0,
        }
    }

    fn registry_specs() -> Vec<ModelSpec> {
        registry_names()
            .iter()
            .map(|name| build_model(&ModelId::new(*name)).unwrap())
            .collect()
    }

    #[test]
    fn drift_vanishes_at_zero_everywhere() {
        for spec in registry_specs() {
            for (step, k) in [(1usize, 0.0), (7, 2.5), (100, 99.0)] {
                let ctx = ctx_at(step, k);
                assert_eq!(
                    (spec.drift)(&ctx, 0.0),
                    0.0,
                    "model {} drift at zero",
                    spec.id.name
                );
            }
        }
    }

    #[test]
    fn drift_sign_is_strict_inside_declared_radius() {
        for spec in registry_specs() {
            let radius = spec.drift_sign_radius.unwrap_or(f64::INFINITY);
            for exp in -3..=1 {
                let mag = 10f64.powi(exp);
                if mag >= radius {
                    continue;
                }
                for u in [mag, -mag] {
                    for (step, k) in [(1usize, 0.0), (11, 4.0)] {
                        let ctx = ctx_at(step, k);
                        let h = (spec.drift)(&ctx, u);
                        assert!(
                            h * u < 0.0,
                            "model {} has H({u})*u = {} at k={k}",
                            spec.id.name,
                            h * u
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn beta_field_converges_to_beta_near_zero() {
        for spec in registry_specs() {
            let ctx = ctx_at(5, 1.5);
            let beta0 = (spec.beta)(&ctx);
            let b4 = (spec.beta_field)(&ctx, 1e-4);
            let b6 = (spec.beta_field)(&ctx, 1e-6);
            assert!(
                (b4 - beta0).abs() <= 1.0 * 1e-4 + 1e-12,
                "model {}: |beta_field(1e-4) - beta| = {}",
                spec.id.name,
                (b4 - beta0).abs()
            );
            assert!((b6 - beta0).abs() <= 1.0 * 1e-6 + 1e-12);
        }
    }

    #[test]
    fn drift_matches_beta_field_times_state() {
        for spec in registry_specs() {
            let ctx = ctx_at(3, 0.75);
            for u in [-2.0, -0.3, 0.4, 1.7] {
                let lhs = (spec.drift)(&ctx, u);
                let rhs = -(spec.beta_field)(&ctx, u) * u;
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0),
                    "model {} at u={u}: {lhs} vs {rhs}",
                    spec.id.name
                );
            }
        }
    }

    #[test]
    fn qc_density_squares_noise_coeff_for_gaussian_models() {
        for spec in registry_specs() {
            if spec.noise != NoiseKind::Gaussian {
                continue;
            }
            let ctx = ctx_at(9, 3.2);
            for u in [-1.0, 0.0, 0.5] {
                let l = (spec.noise_coeff)(&ctx, u);
                let h = (spec.qc_density)(&ctx, u, u);
                assert!(
                    (h - l * l).abs() <= 1e-12 * (l * l).max(1.0),
                    "model {}",
                    spec.id.name
                );
            }
        }
    }

    #[test]
    fn gamma_is_one_at_origin_and_nondecreasing() {
        for spec in registry_specs() {
            if spec.noise != NoiseKind::Gaussian {
                continue; // observation-driven normalizers are checked on runs
            }
            let mut prev = 1.0;
            for i in 0..50 {
                let ctx = StepCtx {
                    step: i + 1,
                    k_left: i as f64 * 0.5,
                    dk: 0.5,
                    jump: false,
                    obs_prev: 0.0,
                    obs_sum: 0.0,
                };
                let g = (spec.gamma)(&ctx);
                assert!(g >= prev - 1e-12, "model {} gamma dipped", spec.id.name);
                if i == 0 {
                    // Right node of the first step from a zero-width step
                    // recovers the origin convention gamma = 1.
                    let origin = StepCtx {
                        step: 1,
                        k_left: 0.0,
                        dk: 0.0,
                        jump: false,
                        obs_prev: 0.0,
                        obs_sum: 0.0,
                    };
                    assert!(((spec.gamma)(&origin) - 1.0).abs() < 1e-12);
                }
                prev = g;
            }
        }
    }

    #[test]
    fn parameter_violations_name_the_inequality() {
        let err = build_model(&ModelId::new(ModelName::LinearStandard).with("beta", 0.4))
            .unwrap_err()
            .to_string();
        assert!(err.contains("2αβ > 1"), "got: {err}");

        let err = build_model(&ModelId::new(ModelName::RmSlowGain).with("r", 0.4))
            .unwrap_err()
            .to_string();
        assert!(err.contains("requires 1/2<r<1"), "got: {err}");

        let err = build_model(&ModelId::new(ModelName::GaltonWatson).with("theta", -1.0))
            .unwrap_err()
            .to_string();
        assert!(err.contains("θ > 0"), "got: {err}");

        let err = build_model(&ModelId::new(ModelName::DeterministicRegression).with("b", 0.5))
            .unwrap_err()
            .to_string();
        assert!(err.contains("b < 0"), "got: {err}");
    }

    #[test]
    fn unknown_parameters_are_rejected() {
        let err = build_model(&ModelId::new(ModelName::LinearStandard).with("lambda", 2.0))
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown parameter 'lambda'"), "got: {err}");
    }

    #[test]
    fn custom_name_has_no_registry_entry() {
        let err = build_model(&ModelId::new(ModelName::Custom)).unwrap_err().to_string();
        assert!(err.contains("custom"), "got: {err}");
    }

    #[test]
    fn branching_step_from_zero_population_is_the_immigrant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(gw_transition(0.8, 0.0, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn branching_step_conditional_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = 0.7;
        let x_prev = 5.0;
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| gw_transition(theta, x_prev, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let mean_true = theta * x_prev + 1.0;
        let var_true = theta * x_prev;
        // 3-sigma bands for the sample mean and (approximately) the sample
        // variance of a Poisson shifted by 1.
        let mean_band = 3.0 * (var_true / n as f64).sqrt();
        assert!((mean - mean_true).abs() < mean_band, "mean {mean}");
        assert!((var - var_true).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn branching_observations_are_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = gw_transition(2.0, OBSERVATION_CAP, &mut rng).unwrap();
        assert_eq!(x, OBSERVATION_CAP);
    }
}
