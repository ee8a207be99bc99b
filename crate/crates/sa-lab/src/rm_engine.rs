//! Path simulation and the pathwise decomposition of the squared error.
//!
//! [`simulate`] runs the Euler analogue of the error recursion
//! `z_i = z_{i-1} + H_i(z_{i-1}) dK_i + l_i(z_{i-1}) dm_i` with left-point
//! coefficient evaluation and records everything needed to re-audit the run:
//! the path, the noise increments with their conditional variances, and the
//! observation sequence for observation-driven models.
//! [`decompose_z_squared`] splits `z^2 - z_0^2` into two nondecreasing
//! compensator processes and a martingale residual, in either of two
//! algebraically equivalent bookkeeping conventions that differ in how jump
//! terms are routed.

use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constants::DIVERGENCE_GUARD;
use crate::error::{Error, Result};
use crate::models::{gw_transition, ModelSpec, NoiseKind, StepCtx};
use crate::process_core::{IncrementStream, SamplePath, TimeGrid};
use crate::rng::standard_normal;

/// One simulated run: the error path, the noise that drove it, and enough
/// context to re-evaluate every model coefficient at every step.
#[derive(Debug, Clone)]
pub struct RmRun {
    model: ModelSpec,
    z: SamplePath,
    noise: IncrementStream,
    seed: u64,
    stream: u64,
    /// Per-step previous observation (observation-driven models, length n).
    obs_prev: Vec<f64>,
    /// Per-step running observation sum (length n).
    obs_sum: Vec<f64>,
}

impl RmRun {
    #[inline]
    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    #[inline]
    pub fn z(&self) -> &SamplePath {
        &self.z
    }

    #[inline]
    pub fn noise(&self) -> &IncrementStream {
        &self.noise
    }

    #[inline]
    pub fn grid(&self) -> &Arc<TimeGrid> {
        self.z.grid()
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// RNG stream index used for this run (0 for standalone runs,
    /// 1-based replication index inside Monte Carlo studies).
    #[inline]
    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn divergence(&self) -> Option<usize> {
        self.z.divergence()
    }

    /// Evaluation context of step `i` (0-based), reconstructing exactly
    /// what the engine saw before drawing that step's noise.
    #[inline]
    pub fn ctx(&self, i: usize) -> StepCtx {
        let grid = self.z.grid();
        StepCtx {
            step: i + 1,
            k_left: grid.k()[i],
            dk: grid.dk()[i],
            jump: grid.jump()[i],
            obs_prev: self.obs_prev.get(i).copied().unwrap_or(0.0),
            obs_sum: self.obs_sum.get(i).copied().unwrap_or(0.0),
        }
    }

    /// Rate-normalizer path on the grid nodes: 1 at the origin, then the
    /// model's `gamma` evaluated at each step's right node.
    pub fn gamma_path(&self) -> Vec<f64> {
        let n = self.grid().n_steps();
        let mut out = Vec::with_capacity(n + 1);
        out.push(1.0);
        for i in 0..n {
            out.push((self.model.gamma)(&self.ctx(i)));
        }
        out
    }

    /// Drift slope at zero, per step (length n).
    pub fn beta_steps(&self) -> Vec<f64> {
        (0..self.grid().n_steps())
            .map(|i| (self.model.beta)(&self.ctx(i)))
            .collect()
    }
}

/// Simulate a run with the default RNG stream 0.
pub fn simulate(model: &ModelSpec, grid: &Arc<TimeGrid>, seed: u64) -> Result<RmRun> {
    simulate_stream(model, grid, seed, 0)
}

/// Simulate a run on a dedicated RNG stream of the seed. Replication `i` of
/// a Monte Carlo study uses stream `i + 1`, which makes every replication a
/// pure function of `(seed, stream)` independent of scheduling.
pub fn simulate_stream(
    model: &ModelSpec,
    grid: &Arc<TimeGrid>,
    seed: u64,
    stream: u64,
) -> Result<RmRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let n = grid.n_steps();
    let is_branching = matches!(model.noise, NoiseKind::GaltonWatson { .. });
    let mut z = Vec::with_capacity(n + 1);
    z.push(model.z0);
    let mut dm = vec![0.0; n];
    let mut dqc = vec![0.0; n];
    let (mut obs_prev_steps, mut obs_sum_steps) = if is_branching {
        (Vec::with_capacity(n), Vec::with_capacity(n))
    } else {
        (Vec::new(), Vec::new())
    };

    // Branching state: the process starts from one individual.
    let mut x_prev = 1.0_f64;
    let mut s_run = 0.0_f64;
    let mut divergence: Option<usize> = None;

    for i in 0..n {
        let step = i + 1;
        let z_left = z[i];

        if divergence.is_some() {
            // Frozen tail: keep the state, no further noise.
            z.push(z_left);
            if is_branching {
                obs_prev_steps.push(x_prev);
                obs_sum_steps.push(s_run);
            }
            continue;
        }

        let ctx;
        match model.noise {
            NoiseKind::Gaussian => {
                ctx = StepCtx {
                    step,
                    k_left: grid.k()[i],
                    dk: grid.dk()[i],
                    jump: grid.jump()[i],
                    obs_prev: 0.0,
                    obs_sum: 0.0,
                };
                let dk = ctx.dk;
                dm[i] = dk.sqrt() * standard_normal(&mut rng);
                dqc[i] = dk;
            }
            NoiseKind::GaltonWatson { theta } => {
                s_run += x_prev;
                ctx = StepCtx {
                    step,
                    k_left: grid.k()[i],
                    dk: grid.dk()[i],
                    jump: grid.jump()[i],
                    obs_prev: x_prev,
                    obs_sum: s_run,
                };
                obs_prev_steps.push(x_prev);
                obs_sum_steps.push(s_run);
                let x_next = gw_transition(theta, x_prev, &mut rng)?;
                dm[i] = (x_next - 1.0 - theta * x_prev) / s_run;
                dqc[i] = theta * x_prev / (s_run * s_run);
                x_prev = x_next;
            }
        }

        let h = (model.drift)(&ctx, z_left);
        let l = (model.noise_coeff)(&ctx, z_left);
        if h.is_nan() || l.is_nan() {
            return Err(Error::NanEvaluator {
                step,
                state: z_left,
            });
        }
        let z_next = z_left + h * ctx.dk + l * dm[i];
        if z_next.is_nan() {
            return Err(Error::NanEvaluator {
                step,
                state: z_left,
            });
        }
        if z_next.abs() > DIVERGENCE_GUARD {
            divergence = Some(step);
            dm[i] = 0.0;
            dqc[i] = 0.0;
            z.push(z_left);
        } else {
            z.push(z_next);
        }
    }

    Ok(RmRun {
        model: model.clone(),
        z: SamplePath::new(grid.clone(), z, divergence)?,
        noise: IncrementStream::new(dm, dqc)?,
        seed,
        stream,
        obs_prev: obs_prev_steps,
        obs_sum: obs_sum_steps,
    })
}

/// Which bookkeeping convention a squared-error decomposition uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Jump-drift second-order terms go to the increasing process, the full
    /// drift cross term to the decreasing one.
    Standard,
    /// Jump steps are netted first: only the positive part of the combined
    /// jump term increases, the negative part decreases.
    Nonstandard,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::Standard => "standard",
            Representation::Nonstandard => "nonstandard",
        }
    }
}

/// Squared-error decomposition: `z_t^2 - z_0^2 = (A1_t - A2_t) + N_t` with
/// `A1`, `A2` nondecreasing predictable and `N` the martingale residual.
#[derive(Debug, Clone)]
pub struct ZSquaredDecomposition {
    pub representation: Representation,
    pub a1: SamplePath,
    pub a2: SamplePath,
    pub mart_residual: SamplePath,
}

/// Decompose the squared error of a completed run.
///
/// Per step, with `H` and the conditional-variance density evaluated at the
/// left state: the drift cross term `2 H z dK`, the jump second-order term
/// `H^2 dK^2`, and the noise compensator `h(z,z) dK` are routed into the
/// two nondecreasing processes according to the representation; what
/// remains of `z^2 - z_0^2` is the martingale residual.
pub fn decompose_z_squared(
    run: &RmRun,
    representation: Representation,
) -> Result<ZSquaredDecomposition> {
    if let Some(step) = run.divergence() {
        return Err(Error::InvalidParameter(format!(
            "decomposition requires a completed run; path diverged at step {step}"
        )));
    }
    let grid = run.grid();
    let n = grid.n_steps();
    let z = run.z.values();
    let model = run.model();

    let mut a1 = Vec::with_capacity(n + 1);
    let mut a2 = Vec::with_capacity(n + 1);
    let mut residual = Vec::with_capacity(n + 1);
    a1.push(0.0);
    a2.push(0.0);
    residual.push(0.0);
    let (mut acc1, mut acc2) = (0.0_f64, 0.0_f64);

    for i in 0..n {
        let ctx = run.ctx(i);
        let dk = ctx.dk;
        let z_left = z[i];
        let h_drift = (model.drift)(&ctx, z_left);
        let h_qc = (model.qc_density)(&ctx, z_left, z_left);
        let v_minus = 2.0 * h_drift * z_left;
        let v_plus = if ctx.jump { h_drift * h_drift * dk } else { 0.0 };

        let (da1, da2) = match representation {
            Representation::Standard => {
                let da1 = if ctx.jump { v_plus * dk } else { 0.0 } + h_qc * dk;
                let da2 = -v_minus * dk;
                (da1, da2)
            }
            Representation::Nonstandard => {
                let w = if ctx.jump { v_minus + v_plus } else { 0.0 };
                let da1 = if ctx.jump { w.max(0.0) * dk } else { 0.0 } + h_qc * dk;
                let da2 = if ctx.jump {
                    (-w).max(0.0) * dk
                } else {
                    -v_minus * dk
                };
                (da1, da2)
            }
        };
        acc1 += da1;
        acc2 += da2;
        a1.push(acc1);
        a2.push(acc2);
        residual.push(z[i + 1] * z[i + 1] - z[0] * z[0] - (acc1 - acc2));
    }

    Ok(ZSquaredDecomposition {
        representation,
        a1: SamplePath::new(grid.clone(), a1, None)?,
        a2: SamplePath::new(grid.clone(), a2, None)?,
        mart_residual: SamplePath::new(grid.clone(), residual, None)?,
    })
}
