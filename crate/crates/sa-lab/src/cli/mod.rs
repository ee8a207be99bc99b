//! Command-line front end.
//!
//! Five subcommands cover the library's main entry points — `simulate`,
//! `decompose`, `average`, `verify`, and `mc` — each driven by the same
//! strict INI configuration and writing CSV tables plus the resolved
//! configuration into an output directory. Exit codes: 0 on success, 1 for
//! configuration or runtime failures (reported as `error: ...` on stderr),
//! 2 for command-line usage errors.

pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::asymptotics::{
    alpha_average, asymptotic_decomposition, check_expansion_conditions, polyak_average,
    WeightKind,
};
use crate::diagnostics::{audit_conditions, check_rate_conditions, Verdict, DEFAULT_U_GRID};
use crate::error::{Error, Result};
use crate::models::build_model;
use crate::montecarlo::{run_study, McConfig, Statistic};
use crate::rm_engine::{simulate, RmRun};

use config::{emit_config, parse_config, Config};
use output::{fnv1a64, write_conditions, write_mc_summary, write_table, OutputMeta};

#[derive(Parser)]
#[command(
    name = "sa-lab",
    version,
    about = "Numerical laboratory for clock-driven stochastic approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it as a CSV table.
    Simulate(CommonArgs),
    /// Split a path into scaled root noise and explicit remainder parts.
    Decompose(CommonArgs),
    /// Average a path under its configured weight.
    Average(CommonArgs),
    /// Audit convergence, rate, and expansion conditions of a run.
    Verify(CommonArgs),
    /// Replicated study of terminal statistics.
    Mc(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the INI run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configured [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the configured [run] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to SA_LAB_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

/// Parse arguments from the process environment and run. Returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with success; usage mistakes
            // go to stderr with the usage exit code.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (args, body): (&CommonArgs, fn(&Config, &Prepared) -> Result<()>) = match &cli.command {
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Decompose(a) => (a, cmd_decompose),
        Command::Average(a) => (a, cmd_average),
        Command::Verify(a) => (a, cmd_verify),
        Command::Mc(a) => (a, cmd_mc),
    };

    let raw = fs::read(&args.config)
        .map_err(|e| Error::io(args.config.display().to_string(), e))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| Error::ConfigInvalid("configuration is not valid UTF-8".into()))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    init_threads(args.threads)?;

    let out_dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let meta = OutputMeta {
        config_hash: fnv1a64(&raw),
        seed: cfg.run.seed,
    };
    let prepared = Prepared { out_dir, meta };

    // The resolved configuration (defaults spelled out, overrides applied)
    // goes next to every output.
    let resolved = emit_config(&cfg)?;
    let resolved_path = prepared.out_dir.join("resolved.ini");
    fs::write(&resolved_path, &resolved)
        .map_err(|e| Error::io(resolved_path.display().to_string(), e))?;

    body(&cfg, &prepared)
}

struct Prepared {
    out_dir: PathBuf,
    meta: OutputMeta,
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SA_LAB_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::ConfigInvalid(format!("SA_LAB_THREADS is not a positive integer: `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(Error::ConfigInvalid("threads must be positive".into()));
        }
        // A second initialization in the same process is harmless: results
        // never depend on the pool shape, only wall time does.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run_once(cfg: &Config) -> Result<RmRun> {
    let model = build_model(&cfg.model)?;
    let grid = Arc::new(cfg.grid.build()?);
    simulate(&model, &grid, cfg.run.seed)
}

fn divergence_note(run: &RmRun) -> String {
    match run.divergence() {
        Some(step) => format!(" (diverged at step {step}; path frozen from there)"),
        None => String::new(),
    }
}

fn cmd_simulate(cfg: &Config, prep: &Prepared) -> Result<()> {
    let run = run_once(cfg)?;
    let path = prep.out_dir.join("path.csv");
    let times = run.grid().k();
    let rows = times
        .iter()
        .zip(run.z().values())
        .map(|(&t, &z)| vec![t, z]);
    write_table(&path, &prep.meta, &["time", "z"], rows)?;
    println!(
        "wrote {} ({} nodes){}",
        path.display(),
        times.len(),
        divergence_note(&run)
    );
    Ok(())
}

fn cmd_decompose(cfg: &Config, prep: &Prepared) -> Result<()> {
    let run = run_once(cfg)?;
    let dec = asymptotic_decomposition(&run)?;
    let path = prep.out_dir.join("decomposition.csv");
    let times = run.grid().k();
    let z = run.z().values();
    let rows = (0..times.len()).map(|i| {
        vec![
            times[i],
            z[i],
            dec.scale[i],
            dec.root_noise[i],
            dec.root_noise_qv[i],
            dec.chi[i],
            dec.remainder[i],
            dec.remainder_parts[0][i],
            dec.remainder_parts[1][i],
            dec.remainder_parts[2][i],
        ]
    });
    write_table(
        &path,
        &prep.meta,
        &[
            "time",
            "z",
            "scale",
            "root_noise",
            "noise_qv",
            "chi",
            "remainder",
            "part_excision",
            "part_curvature",
            "part_noise",
        ],
        rows,
    )?;
    println!(
        "wrote {} ({} nodes, reconstruction error {:.2e}, {} excised steps)",
        path.display(),
        times.len(),
        dec.reconstruction_error,
        dec.excised.iter().filter(|&&e| e).count()
    );
    Ok(())
}

fn cmd_average(cfg: &Config, prep: &Prepared) -> Result<()> {
    let run = run_once(cfg)?;
    let model = run.model();
    let avg = match cfg.run.alpha_avg {
        Some(alpha) => {
            let dec = asymptotic_decomposition(&run)?;
            alpha_average(&run, &dec, alpha)?
        }
        None => polyak_average(&run, &WeightKind::Custom(model.weight_g.clone()))?,
    };
    let path = prep.out_dir.join("average.csv");
    let times = run.grid().k();
    let z = run.z().values();
    let zbar = avg.zbar.values();
    let rows = (0..times.len()).map(|i| vec![times[i], z[i], zbar[i], avg.eps[i]]);
    write_table(&path, &prep.meta, &["time", "z", "zbar", "eps"], rows)?;
    println!(
        "wrote {} ({} nodes, terminal average {:.6e}){}",
        path.display(),
        times.len(),
        avg.zbar.terminal(),
        divergence_note(&run)
    );
    Ok(())
}

fn cmd_verify(cfg: &Config, prep: &Prepared) -> Result<()> {
    let run = run_once(cfg)?;
    let th = &cfg.thresholds;
    let mut reports = audit_conditions(&run, &DEFAULT_U_GRID, th)?;
    if let Some(delta) = cfg.run.delta {
        reports.extend(check_rate_conditions(&run, delta, cfg.run.delta0, th)?);
    }
    let dec = asymptotic_decomposition(&run)?;
    reports.extend(check_expansion_conditions(
        &run,
        &dec,
        cfg.run.epsilon,
        cfg.run.delta0,
        th,
    )?);
    let path = prep.out_dir.join("conditions.csv");
    write_conditions(&path, &prep.meta, &reports)?;
    let fails = reports.iter().filter(|r| r.verdict == Verdict::Fails).count();
    let open = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Inconclusive)
        .count();
    println!(
        "wrote {} ({} conditions: {} hold, {} fail, {} inconclusive)",
        path.display(),
        reports.len(),
        reports.len() - fails - open,
        fails,
        open
    );
    Ok(())
}

fn cmd_mc(cfg: &Config, prep: &Prepared) -> Result<()> {
    let mut statistics = vec![
        Statistic::ZTerminal,
        Statistic::ZbarTerminal {
            adaptive_alpha: cfg.run.alpha_avg,
        },
    ];
    if let Some(delta) = cfg.run.delta {
        statistics.push(Statistic::RateMonitor { delta });
    }
    statistics.push(Statistic::RemainderAbs);
    let mc = McConfig {
        model: cfg.model.clone(),
        grid: Arc::new(cfg.grid.build()?),
        reps: cfg.run.reps,
        seed: cfg.run.seed,
        statistics,
    };
    let summary = run_study(&mc)?;
    let path = prep.out_dir.join("mc_summary.csv");
    write_mc_summary(&path, &prep.meta, &summary)?;
    println!(
        "wrote {} ({} replications, {} divergent)",
        path.display(),
        summary.reps,
        summary.divergent
    );
    for stat in &summary.stats {
        use crate::asymptotics::Prediction;
        match (&stat.prediction, stat.ks) {
            (Prediction::Predicted { variance, .. }, Some(ks)) => println!(
                "  {}: variance {:.4} (predicted {variance:.4}), KS {ks:.4}",
                stat.label, stat.variance
            ),
            _ => println!(
                "  {}: mean {:.4e}, variance {:.4e}",
                stat.label, stat.mean, stat.variance
            ),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_override_validates() {
        assert!(init_threads(Some(0)).is_err());
        assert!(init_threads(Some(1)).is_ok());
        assert!(init_threads(None).is_ok());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
