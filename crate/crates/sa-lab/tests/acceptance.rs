//! Acceptance gate: seven numbered criteria, each with exactly one printed
//! `criterion N: PASS/FAIL` line (plus indented context) and a hard
//! assertion. Criteria 2 and 3 share one replicated linear study; criteria
//! 4 and 5 share one replicated slow-gain study, so the suite simulates
//! each battery once.
//!
//! Run with `--nocapture` to see the per-criterion lines on success; on a
//! failure the captured lines are printed by the harness.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use sa_lab::asymptotics::asymptotic_decomposition;
use sa_lab::cli::config::{emit_config, parse_config, Config, GridSpec, RunParams};
use sa_lab::diagnostics::fixtures::{branching_fixture, rate_fixture_suite};
use sa_lab::diagnostics::{
    audit_conditions, check_rate_conditions_data, ConditionReport, Thresholds, Verdict,
    DEFAULT_U_GRID,
};
use sa_lab::models::{build_model, ModelId, ModelName};
use sa_lab::montecarlo::{run_study, McConfig, McSummary, StatSummary, Statistic};
use sa_lab::process_core::{cumulative_integral, dolean_exponential, inverse_exponential, TimeGrid};
use sa_lab::rm_engine::{decompose_z_squared, simulate, simulate_stream, Representation};

fn conclude(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn stat<'a>(summary: &'a McSummary, label: &str) -> &'a StatSummary {
    summary
        .stats
        .iter()
        .find(|s| s.label == label)
        .unwrap_or_else(|| panic!("study has no statistic labeled {label}"))
}

/// Linear study shared by criteria 2 and 3: unit parameters, horizon 10^3,
/// step 0.01, 2000 replications.
fn linear_study() -> &'static McSummary {
    static STUDY: OnceLock<McSummary> = OnceLock::new();
    STUDY.get_or_init(|| {
        run_study(&McConfig {
            model: ModelId::new(ModelName::LinearStandard),
            grid: Arc::new(TimeGrid::continuous(1.0e3, 0.01).unwrap()),
            reps: 2000,
            seed: 2026,
            statistics: vec![
                Statistic::ZTerminal,
                Statistic::ZbarTerminal {
                    adaptive_alpha: None,
                },
            ],
        })
        .expect("linear study failed")
    })
}

/// Slow-gain study shared by criteria 4 and 5: `r = 0.9`, `alpha = 0.5`,
/// quadratic drift correction `0.1 u^2`, horizon 10^4, step 0.05, 1000
/// replications.
fn slow_gain_study() -> &'static McSummary {
    static STUDY: OnceLock<McSummary> = OnceLock::new();
    STUDY.get_or_init(|| {
        run_study(&McConfig {
            model: slow_gain_id(),
            grid: Arc::new(TimeGrid::continuous(1.0e4, 0.05).unwrap()),
            reps: 1000,
            seed: 909,
            statistics: vec![
                Statistic::ZTerminal,
                Statistic::ZbarTerminal {
                    adaptive_alpha: None,
                },
                Statistic::RemainderAbs,
            ],
        })
        .expect("slow-gain study failed")
    })
}

fn slow_gain_id() -> ModelId {
    ModelId::new(ModelName::RmSlowGain)
        .with("r", 0.9)
        .with("alpha", 0.5)
        .with("beta", 1.0)
        .with("sigma", 1.0)
        .with("c", 0.1)
}

/// Finite-horizon variance of the normalized terminal error of the
/// slow-gain model, by quadrature: an independent oracle for where the
/// replicated study should land at this horizon (the asymptotic constant
/// `alpha sigma^2 / (2 beta)` is the `U -> infinity` limit of the same
/// integral).
fn slow_gain_variance_by_quadrature(
    alpha: f64,
    beta: f64,
    sigma: f64,
    r: f64,
    horizon: f64,
) -> f64 {
    let u = (1.0 + horizon).powf(1.0 - r);
    let c = alpha * beta / (1.0 - r);
    let f = |v: f64| (1.0 - v / u).powf(-r / (1.0 - r)) * (-2.0 * c * v).exp();
    let panels = 2000;
    let h = (u - 1.0) / panels as f64;
    let mut simpson = f(0.0) + f(u - 1.0);
    for j in 1..panels {
        let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
        simpson += weight * f(j as f64 * h);
    }
    alpha * alpha * sigma * sigma / (1.0 - r) * simpson * h / 3.0
}

#[test]
fn criterion_1_recursive_branching_estimate_equals_the_closed_form_ratio() {
    let started = Instant::now();
    // One extra step so the last audited index still has its follow-up
    // observation available through the step contexts.
    let grid = Arc::new(TimeGrid::discrete(1001).unwrap());
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        for theta in [0.5, 1.0, 2.0] {
            for theta0 in [-5.0, 0.0, 7.0] {
                let model = build_model(
                    &ModelId::new(ModelName::GaltonWatson)
                        .with("theta", theta)
                        .with("theta0", theta0),
                )
                .unwrap();
                let run = simulate(&model, &grid, seed).unwrap();
                let z = run.z().values();
                let mut numerator = 0.0_f64;
                for i in 1..=1000_usize {
                    numerator += run.ctx(i).obs_prev - 1.0;
                    let denominator = run.ctx(i - 1).obs_sum;
                    let closed_form = numerator / denominator;
                    let recursive = theta + z[i];
                    let rel = (recursive - closed_form).abs() / closed_form.abs().max(1.0);
                    worst = worst.max(rel);
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(5);
    conclude(
        1,
        pass,
        &format!(
            "recursive estimate vs observation ratio over 900 runs x 1000 steps: \
             worst relative gap {worst:.2e} (tolerance 1e-10), {:.2}s (limit 5s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_linear_terminal_error_is_asymptotically_normal() {
    let study = linear_study();
    let s = stat(study, "z_terminal");
    let ks = s.ks.expect("terminal statistic carries a distribution check");
    let pass = (0.85..=1.15).contains(&s.variance) && ks < 0.0364;
    conclude(
        2,
        pass,
        &format!(
            "sqrt(1+T) z_T over 2000 replications: variance {:.4} (required 1 +/- 15%), \
             KS distance {ks:.4} (required < 0.0364)",
            s.variance
        ),
    );
}

#[test]
fn criterion_3_linear_averaged_error_doubles_the_variance() {
    let study = linear_study();
    let s = stat(study, "zbar_terminal");
    let pass = (1.7..=2.3).contains(&s.variance);
    conclude(
        3,
        pass,
        &format!(
            "sqrt(1+T) zbar_T over 2000 replications: variance {:.4} (required 2 +/- 15%)",
            s.variance
        ),
    );
}

#[test]
fn criterion_4_slow_gain_variances_reach_their_asymptotic_constants() {
    let study = slow_gain_study();
    let vz = stat(study, "z_terminal").variance;
    let vzbar = stat(study, "zbar_terminal").variance;
    let oracle = slow_gain_variance_by_quadrature(0.5, 1.0, 1.0, 0.9, 1.0e4);
    println!(
        "  context: finite-horizon quadrature for (1+T)^(r/2) z_T predicts variance {oracle:.4} \
         at T = 1e4 (measured/quadrature = {:.3}); the asymptotic constant 0.25 is approached \
         only as (1+T)^(1-r) grows, which reaches the +/-20% band near T ~ 2e7",
        vz / oracle
    );
    let pass = (0.2..=0.3).contains(&vz) && (0.8..=1.2).contains(&vzbar);
    conclude(
        4,
        pass,
        &format!(
            "(1+T)^(r/2) z_T over 1000 replications: variance {vz:.4} (required 0.25 +/- 20%); \
             sqrt(1+T) zbar_T: variance {vzbar:.4} (required 1 +/- 20%)"
        ),
    );
}

#[test]
fn criterion_5_remainder_terms_vanish_with_the_horizon() {
    let long = stat(slow_gain_study(), "remainder_abs").abs_p90;
    let short_study = run_study(&McConfig {
        model: slow_gain_id(),
        grid: Arc::new(TimeGrid::continuous(1.0e3, 0.05).unwrap()),
        reps: 1000,
        seed: 909,
        statistics: vec![Statistic::RemainderAbs],
    })
    .expect("short-horizon study failed");
    let short = stat(&short_study, "remainder_abs").abs_p90;
    let pass = long < 0.5 * short;
    conclude(
        5,
        pass,
        &format!(
            "|R_T| 90th percentile: {long:.3e} at T = 1e4 vs {short:.3e} at T = 1e3 \
             (required below half)"
        ),
    );
}

#[test]
fn criterion_6_condition_checker_fixtures_reproduce_their_pinned_verdicts() {
    let started = Instant::now();
    let th = Thresholds::default();
    let mut mismatches: Vec<String> = Vec::new();
    let mut pinned = 0_usize;

    let verdict_of = |reports: &[ConditionReport], id_str: &str| -> Verdict {
        reports
            .iter()
            .find(|r| r.id.as_str() == id_str)
            .unwrap_or_else(|| panic!("no report for {id_str}"))
            .verdict
    };

    for fixture in rate_fixture_suite() {
        for call in &fixture.calls {
            let reports =
                check_rate_conditions_data(&fixture.data(), call.delta, call.delta0, &th)
                    .expect("rate audit failed");
            for (id, want) in &call.expect {
                pinned += 1;
                let got = verdict_of(&reports, id.as_str());
                if got != *want {
                    mismatches.push(format!(
                        "{} at delta {}: {} expected {want}, got {got}",
                        fixture.name,
                        call.delta,
                        id.as_str()
                    ));
                }
            }
        }
    }

    for theta in [0.5, 2.0] {
        let fixture = branching_fixture(theta).expect("branching fixture failed");
        let reports =
            audit_conditions(&fixture.run, &DEFAULT_U_GRID, &th).expect("structural audit failed");
        for (id, want) in &fixture.expect {
            pinned += 1;
            let got = verdict_of(&reports, id.as_str());
            if got != *want {
                mismatches.push(format!(
                    "offspring mean {theta}: {} expected {want}, got {got}",
                    id.as_str()
                ));
            }
        }
    }

    let elapsed = started.elapsed();
    for m in &mismatches {
        println!("  mismatch: {m}");
    }
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(5);
    conclude(
        6,
        pass,
        &format!(
            "{pinned} pinned verdicts across 5 rate fixtures and 2 estimation regimes, \
             {} mismatches, {:.2}s (limit 5s)",
            mismatches.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_7_algebraic_and_property_battery_stays_fast() {
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();

    // (a) The multiplicative exponential solves its defining integral
    // equation exactly on a pure-jump grid.
    {
        let grid = TimeGrid::discrete(5000).unwrap();
        let rate: Vec<f64> = (0..=5000).map(|i| 0.8 * (0.01 * i as f64).sin().powi(2)).collect();
        let path = dolean_exponential(&rate, &grid).unwrap();
        let integrand: Vec<f64> = rate.iter().zip(&path).map(|(r, e)| r * e).collect();
        let cum = cumulative_integral(&integrand, grid.dk()).unwrap();
        let worst = path
            .iter()
            .zip(&cum)
            .map(|(e, c)| (e - (1.0 - c)).abs())
            .fold(0.0_f64, f64::max);
        if worst > 1e-10 {
            failures.push(format!("integral-equation identity off by {worst:.2e}"));
        }
    }

    // (b) The exponential and its reciprocal cancel on a mixed grid.
    {
        let n = 4000;
        let dk: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.25 }).collect();
        let jump: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let grid = TimeGrid::from_increments(dk, jump).unwrap();
        let rate: Vec<f64> = (0..=n).map(|i| 0.7 * (0.02 * i as f64).cos()).collect();
        let forward = dolean_exponential(&rate, &grid).unwrap();
        let backward = inverse_exponential(&rate, &grid).unwrap();
        let worst = forward
            .iter()
            .zip(&backward)
            .map(|(e, i)| (e * i - 1.0).abs())
            .fold(0.0_f64, f64::max);
        if worst > 1e-12 {
            failures.push(format!("inverse identity off by {worst:.2e}"));
        }
    }

    // (c) The normalized error reconstructs from its split at 1e-10 across
    // the registry.
    {
        let cases: Vec<(ModelId, Arc<TimeGrid>)> = vec![
            (
                ModelId::new(ModelName::LinearStandard).with("z0", 2.0),
                Arc::new(TimeGrid::continuous(200.0, 0.05).unwrap()),
            ),
            (
                ModelId::new(ModelName::LinearSlowGain).with("r", 0.7),
                Arc::new(TimeGrid::continuous(200.0, 0.05).unwrap()),
            ),
            (
                slow_gain_id().with("z0", 1.0),
                Arc::new(TimeGrid::continuous(200.0, 0.05).unwrap()),
            ),
            (
                ModelId::new(ModelName::DeterministicRegression).with("p", 0.8),
                Arc::new(TimeGrid::continuous(200.0, 0.05).unwrap()),
            ),
            (
                ModelId::new(ModelName::GaltonWatson)
                    .with("theta", 0.7)
                    .with("theta0", 4.0),
                Arc::new(TimeGrid::discrete(2000).unwrap()),
            ),
        ];
        for (id, grid) in cases {
            for seed in 0..3 {
                let run = simulate(&build_model(&id).unwrap(), &grid, seed).unwrap();
                let dec = asymptotic_decomposition(&run).unwrap();
                if dec.reconstruction_error > 1e-10 {
                    failures.push(format!(
                        "reconstruction error {:.2e} for {} seed {seed}",
                        dec.reconstruction_error, id.name
                    ));
                }
            }
        }
    }

    // (d) Both squared-error representations keep nondecreasing books and
    // agree on the net compensator.
    {
        let model = build_model(
            &ModelId::new(ModelName::GaltonWatson)
                .with("theta", 0.6)
                .with("theta0", 3.0),
        )
        .unwrap();
        let grid = Arc::new(TimeGrid::discrete(1500).unwrap());
        let run = simulate(&model, &grid, 17).unwrap();
        let standard = decompose_z_squared(&run, Representation::Standard).unwrap();
        let netted = decompose_z_squared(&run, Representation::Nonstandard).unwrap();
        for dec in [&standard, &netted] {
            for book in [dec.a1.values(), dec.a2.values()] {
                if book.windows(2).any(|w| w[1] < w[0]) {
                    failures.push("a squared-error book decreased".into());
                }
            }
        }
        let worst = (0..=1500)
            .map(|i| {
                let net_s = standard.a1.values()[i] - standard.a2.values()[i];
                let net_n = netted.a1.values()[i] - netted.a2.values()[i];
                (net_s - net_n).abs() / (1.0 + standard.a1.values()[i].abs())
            })
            .fold(0.0_f64, f64::max);
        if worst > 1e-9 {
            failures.push(format!("net compensators disagree by {worst:.2e}"));
        }
    }

    // (e) Implication audits on estimation runs: whenever the squeeze
    // family fully holds, the envelope family may not fail, and whenever
    // the envelope family fully holds, the growth family may not fail.
    {
        let th = Thresholds::default();
        let grid = Arc::new(TimeGrid::discrete(1500).unwrap());
        for (theta, seed) in [(0.3, 1), (0.5, 2), (0.8, 3), (2.0, 11)] {
            let model = build_model(
                &ModelId::new(ModelName::GaltonWatson).with("theta", theta),
            )
            .unwrap();
            let run = simulate(&model, &grid, seed).unwrap();
            let reports = audit_conditions(&run, &DEFAULT_U_GRID, &th).unwrap();
            let verdict = |id: &str| {
                reports
                    .iter()
                    .find(|r| r.id.as_str() == id)
                    .unwrap_or_else(|| panic!("no report for {id}"))
                    .verdict
            };
            let all_hold = |ids: &[&str]| ids.iter().all(|id| verdict(id) == Verdict::Holds);
            let none_fail = |ids: &[&str]| ids.iter().all(|id| verdict(id) != Verdict::Fails);
            if all_hold(&["S1_i1", "S1_i2", "S1_ii", "S1"]) && !none_fail(&["I_i1", "I_i2", "I_ii"])
            {
                failures.push(format!("squeeze holds but envelope fails at theta {theta}"));
            }
            if all_hold(&["I_i1", "I_i2", "I_ii"]) && !none_fail(&["II_i", "II_ii"]) {
                failures.push(format!("envelope holds but growth fails at theta {theta}"));
            }
        }
    }

    // (f) Runs are pure functions of (seed, stream), and streams separate.
    {
        let model = build_model(&ModelId::new(ModelName::LinearStandard)).unwrap();
        let grid = Arc::new(TimeGrid::continuous(50.0, 0.1).unwrap());
        let a = simulate_stream(&model, &grid, 7, 1).unwrap();
        let b = simulate_stream(&model, &grid, 7, 1).unwrap();
        let c = simulate_stream(&model, &grid, 7, 2).unwrap();
        if a.z().values() != b.z().values() {
            failures.push("identical (seed, stream) produced different paths".into());
        }
        if a.z().values() == c.z().values() {
            failures.push("distinct streams produced identical paths".into());
        }
    }

    // (g) Emitted configurations are fixed points of the parser across the
    // registry and both grid kinds.
    {
        let models = [
            ModelId::new(ModelName::LinearStandard),
            ModelId::new(ModelName::LinearSlowGain).with("r", 0.65),
            slow_gain_id(),
            ModelId::new(ModelName::GaltonWatson).with("theta", 1.25),
            ModelId::new(ModelName::DeterministicRegression),
        ];
        for (i, model) in models.into_iter().enumerate() {
            let grid = if i % 2 == 0 {
                GridSpec::Continuous {
                    horizon: 123.0,
                    dt: 0.07,
                }
            } else {
                GridSpec::Discrete { steps: 4096 }
            };
            let cfg = Config {
                model,
                grid,
                run: RunParams {
                    seed: 99,
                    delta: Some(0.4),
                    ..RunParams::default()
                },
                out_dir: "out".into(),
                thresholds: Thresholds::default(),
            };
            let emitted = emit_config(&cfg).unwrap();
            let again = emit_config(&parse_config(&emitted).unwrap()).unwrap();
            if emitted != again {
                failures.push(format!("config for {} is not a fixed point", cfg.model.name));
            }
        }
    }

    let elapsed = started.elapsed();
    for f in &failures {
        println!("  failure: {f}");
    }
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    conclude(
        7,
        pass,
        &format!(
            "exponential identities, reconstruction, squared-error books, implication \
             audits, determinism, config round-trip: {} failures, {:.2}s (limit 30s)",
            failures.len(),
            elapsed.as_secs_f64()
        ),
    );
}
