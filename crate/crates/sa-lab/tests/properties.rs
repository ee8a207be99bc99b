//! Property tests for the invariants the library promises mechanically:
//! floating-point-monotone accumulations stay monotone, dual-route
//! computations of the same quantity agree, simulation is a pure function
//! of its inputs, and the configuration emitter is a fixed point of its
//! own parser. Strategies stay inside the parameter ranges the builders
//! accept so every generated case must succeed.

use proptest::prelude::*;
use sa_lab::asymptotics::{asymptotic_decomposition, average_with_weight_increments};
use sa_lab::cli::config::{emit_config, parse_config, Config, GridSpec, RunParams};
use sa_lab::diagnostics::Thresholds;
use sa_lab::models::{build_model, ModelId, ModelName, NoiseKind, StepCtx};
use sa_lab::process_core::{
    cumulative_integral, dolean_exponential, inverse_exponential, SamplePath, TimeGrid,
};
use sa_lab::rm_engine::{decompose_z_squared, simulate_stream, Representation};
use std::sync::Arc;

/// Linear-model ids with `2 alpha beta > 1` by construction.
fn linear_id() -> impl Strategy<Value = ModelId> {
    (0.6..1.8_f64, 0.9..1.9_f64, 0.5..2.0_f64, -5.0..5.0_f64).prop_map(|(a, b, s, z0)| {
        ModelId::new(ModelName::LinearStandard)
            .with("alpha", a)
            .with("beta", b)
            .with("sigma", s)
            .with("z0", z0)
    })
}

/// Slow-gain ids inside the `1/2 < r < 1` band.
fn slow_gain_id() -> impl Strategy<Value = ModelId> {
    (0.55..0.95_f64, 0.3..1.5_f64, 0.5..2.0_f64, -3.0..3.0_f64).prop_map(|(r, a, s, z0)| {
        ModelId::new(ModelName::LinearSlowGain)
            .with("r", r)
            .with("alpha", a)
            .with("sigma", s)
            .with("z0", z0)
    })
}

/// Branching ids kept subcritical enough that the observation total stays
/// representable over the step counts used here.
fn branching_id() -> impl Strategy<Value = ModelId> {
    (0.2..1.5_f64, -5.0..7.0_f64).prop_map(|(theta, theta0)| {
        ModelId::new(ModelName::GaltonWatson)
            .with("theta", theta)
            .with("theta0", theta0)
    })
}

/// Continuous grids of moderate size (at most a few thousand steps).
fn continuous_grid() -> impl Strategy<Value = Arc<TimeGrid>> {
    (5.0..60.0_f64, 0.02..0.4_f64)
        .prop_map(|(horizon, dt)| Arc::new(TimeGrid::continuous(horizon, dt).unwrap()))
}

/// Mixed grids: per-step increments with independent jump flags.
fn mixed_grid() -> impl Strategy<Value = TimeGrid> {
    prop::collection::vec((0.05..1.0_f64, any::<bool>()), 1..200).prop_map(|steps| {
        let (dk, jump): (Vec<f64>, Vec<bool>) = steps.into_iter().unzip();
        TimeGrid::from_increments(dk, jump).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A run is a pure function of (model, grid, seed, stream): repeating
    /// the call reproduces every node bit for bit.
    #[test]
    fn simulation_is_bitwise_reproducible(
        id in prop_oneof![linear_id(), slow_gain_id()],
        grid in continuous_grid(),
        seed in any::<u64>(),
        stream in 0..64_u64,
    ) {
        let model = build_model(&id).unwrap();
        let first = simulate_stream(&model, &grid, seed, stream)?;
        let second = simulate_stream(&model, &grid, seed, stream)?;
        prop_assert_eq!(first.z().values(), second.z().values());
        prop_assert_eq!(first.divergence(), second.divergence());
    }

    /// The exact node-by-node split of the normalized error reconstructs
    /// the normalized state to the documented tolerance on arbitrary
    /// in-range models and grids.
    #[test]
    fn normalized_error_always_reconstructs(
        id in prop_oneof![linear_id(), slow_gain_id()],
        grid in continuous_grid(),
        seed in any::<u64>(),
    ) {
        let model = build_model(&id).unwrap();
        let run = simulate_stream(&model, &grid, seed, 0)?;
        let dec = asymptotic_decomposition(&run)?;
        prop_assert!(dec.reconstruction_error <= 1e-10,
            "reconstruction error {} out of tolerance", dec.reconstruction_error);
    }

    /// Same reconstruction guarantee on observation-driven runs, where the
    /// grid is pure-jump and the first step is excised.
    #[test]
    fn branching_error_always_reconstructs(
        id in branching_id(),
        steps in 50..400_usize,
        seed in any::<u64>(),
    ) {
        let model = build_model(&id).unwrap();
        let grid = Arc::new(TimeGrid::discrete(steps)?);
        let run = simulate_stream(&model, &grid, seed, 0)?;
        let dec = asymptotic_decomposition(&run)?;
        prop_assert!(dec.reconstruction_error <= 1e-10,
            "reconstruction error {} out of tolerance", dec.reconstruction_error);
    }

    /// The normalization family along any registry run starts at 1, never
    /// drops below 1, and never decreases.
    #[test]
    fn gamma_paths_are_monotone_from_one(
        id in prop_oneof![linear_id(), slow_gain_id(), branching_id()],
        seed in any::<u64>(),
    ) {
        let model = build_model(&id).unwrap();
        let grid: Arc<TimeGrid> = match matches!(model.noise, NoiseKind::GaltonWatson { .. }) {
            true => Arc::new(TimeGrid::discrete(300)?),
            false => Arc::new(TimeGrid::continuous(30.0, 0.1)?),
        };
        let run = simulate_stream(&model, &grid, seed, 0)?;
        let gamma = run.gamma_path();
        prop_assert_eq!(gamma[0], 1.0);
        for w in gamma.windows(2) {
            prop_assert!(w[1] >= w[0] && w[0] >= 1.0, "gamma not monotone: {:?}", w);
        }
    }

    /// Both squared-error representations carry nondecreasing books, and
    /// netting the jump terms first (the nonstandard route) can only
    /// shrink both books relative to routing them separately.
    #[test]
    fn squared_error_books_are_monotone_and_netting_shrinks_them(
        id in branching_id(),
        steps in 30..300_usize,
        seed in any::<u64>(),
    ) {
        let model = build_model(&id).unwrap();
        let grid = Arc::new(TimeGrid::discrete(steps)?);
        let run = simulate_stream(&model, &grid, seed, 0)?;
        let standard = decompose_z_squared(&run, Representation::Standard)?;
        let netted = decompose_z_squared(&run, Representation::Nonstandard)?;
        for dec in [&standard, &netted] {
            for book in [dec.a1.values(), dec.a2.values()] {
                for w in book.windows(2) {
                    prop_assert!(w[1] >= w[0], "book decreased: {:?}", w);
                }
            }
        }
        for i in 0..=steps {
            prop_assert!(netted.a1.values()[i] <= standard.a1.values()[i]);
            prop_assert!(netted.a2.values()[i] <= standard.a2.values()[i]);
        }
    }

    /// Whatever the representation, books plus martingale residual add
    /// back up to the squared error at every node.
    #[test]
    fn squared_error_decompositions_reconstruct(
        id in prop_oneof![linear_id(), branching_id()],
        seed in any::<u64>(),
        netted in any::<bool>(),
    ) {
        let model = build_model(&id).unwrap();
        let grid: Arc<TimeGrid> = match matches!(model.noise, NoiseKind::GaltonWatson { .. }) {
            true => Arc::new(TimeGrid::discrete(200)?),
            false => Arc::new(TimeGrid::continuous(20.0, 0.1)?),
        };
        let run = simulate_stream(&model, &grid, seed, 0)?;
        let rep = if netted { Representation::Nonstandard } else { Representation::Standard };
        let dec = decompose_z_squared(&run, rep)?;
        let z = run.z().values();
        for i in 0..z.len() {
            let rebuilt = z[0] * z[0] + dec.a1.values()[i] - dec.a2.values()[i]
                + dec.mart_residual.values()[i];
            let tol = 1e-9 * (1.0 + z[i] * z[i] + dec.a1.values()[i]);
            prop_assert!((rebuilt - z[i] * z[i]).abs() <= tol,
                "node {i}: rebuilt {rebuilt} vs {}", z[i] * z[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The multiplicative exponential and its reciprocal cancel factor by
    /// factor on arbitrary mixed grids, as long as no jump factor vanishes.
    #[test]
    fn exponential_times_inverse_is_one(
        grid in mixed_grid(),
        rates in prop::collection::vec(-0.5..0.9_f64, 201),
    ) {
        let rate = &rates[..grid.n_steps() + 1];
        let forward = dolean_exponential(rate, &grid)?;
        let backward = inverse_exponential(rate, &grid)?;
        for (e, i) in forward.iter().zip(&backward) {
            prop_assert!((e * i - 1.0).abs() <= 1e-12, "e * 1/e = {}", e * i);
        }
    }

    /// For a frozen rate the continuous-step factors are exact, so the
    /// exponential matches the closed form at every node of any
    /// continuous grid.
    #[test]
    fn frozen_rate_exponential_matches_the_closed_form(
        r in -0.5..0.9_f64,
        grid in continuous_grid(),
    ) {
        let rate = vec![r; grid.n_steps() + 1];
        let path = dolean_exponential(&rate, &grid)?;
        for (t, e) in grid.k().iter().zip(&path) {
            let exact = (-r * t).exp();
            prop_assert!((e - exact).abs() <= 1e-10 * exact.max(1.0),
                "node t = {t}: {e} vs {exact}");
        }
    }

    /// Integrating a nonnegative integrand against nonnegative increments
    /// never produces a decreasing cumulative — exactly, not just up to
    /// rounding, because adding a nonnegative term cannot shrink a float.
    #[test]
    fn nonnegative_integrals_never_decrease(
        values in prop::collection::vec(0.0..1e6_f64, 2..250),
        scale in 0.01..10.0_f64,
    ) {
        let increments: Vec<f64> = values.windows(2).map(|w| w[0].min(w[1]) * scale * 1e-6).collect();
        let cum = cumulative_integral(&values, &increments)?;
        prop_assert!(cum[0] >= 0.0);
        for w in cum.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    /// An average driven by nonnegative weight increments is a convex
    /// combination of the path so far: it can never leave the running
    /// envelope of the values (up to a rounding-sized slack).
    #[test]
    fn weighted_averages_stay_inside_the_running_envelope(
        values in prop::collection::vec(-1e3..1e3_f64, 2..150),
        weights in prop::collection::vec(0.0..5.0_f64, 149),
    ) {
        let n = values.len() - 1;
        let grid = Arc::new(TimeGrid::discrete(n)?);
        let path = SamplePath::new(grid, values.clone(), None)?;
        let result = average_with_weight_increments(&path, &weights[..n])?;
        let zbar = result.zbar.values();
        let (mut lo, mut hi) = (values[0], values[0]);
        prop_assert_eq!(zbar[0], values[0]);
        for i in 1..=n {
            lo = lo.min(values[i - 1]);
            hi = hi.max(values[i - 1]);
            let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            prop_assert!(zbar[i] >= lo - slack && zbar[i] <= hi + slack,
                "node {i}: average {} left [{lo}, {hi}]", zbar[i]);
        }
    }

    /// Every registry drift pushes the state toward zero throughout its
    /// declared sign radius (everywhere, when no radius is declared).
    #[test]
    fn registry_drifts_push_toward_zero(
        id in prop_oneof![
            linear_id(),
            slow_gain_id(),
            branching_id(),
            Just(ModelId::new(ModelName::RmSlowGain).with("c", 0.4)),
            Just(ModelId::new(ModelName::DeterministicRegression).with("p", 0.7)),
        ],
        k_left in 0.0..1e4_f64,
        dk in 0.01..1.0_f64,
        obs in (0.0..50.0_f64, 1.0..1e6_f64),
        frac in -0.999..0.999_f64,
    ) {
        let model = build_model(&id).unwrap();
        let ctx = StepCtx {
            step: 1,
            k_left,
            dk,
            jump: matches!(model.noise, NoiseKind::GaltonWatson { .. }),
            obs_prev: obs.0,
            obs_sum: obs.1 + obs.0,
        };
        let radius = model.drift_sign_radius.unwrap_or(10.0);
        let u = frac * radius;
        prop_assert!(u * (model.drift)(&ctx, u) <= 0.0,
            "drift at u = {u} points away from zero");
    }

    /// The configuration emitter is a fixed point of its own parser:
    /// parsing an emitted file and emitting again reproduces it verbatim.
    #[test]
    fn emitted_configs_are_parse_fixed_points(
        id in prop_oneof![linear_id(), slow_gain_id(), branching_id()],
        continuous in any::<bool>(),
        horizon in 1.0..5e3_f64,
        dt in 0.001..0.5_f64,
        steps in 1..100_000_usize,
        seed in any::<u64>(),
        reps in 1..10_000_usize,
        delta in prop::option::of(0.05..0.95_f64),
        alpha_avg in prop::option::of(0.2..3.0_f64),
    ) {
        let cfg = Config {
            model: id,
            grid: if continuous {
                GridSpec::Continuous { horizon, dt }
            } else {
                GridSpec::Discrete { steps }
            },
            run: RunParams { seed, reps, delta, alpha_avg, ..RunParams::default() },
            out_dir: "out".into(),
            thresholds: Thresholds::default(),
        };
        let emitted = emit_config(&cfg)?;
        let reparsed = parse_config(&emitted)?;
        prop_assert_eq!(emit_config(&reparsed)?, emitted);
    }
}
