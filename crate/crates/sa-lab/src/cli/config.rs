//! Strict INI run configurations.
//!
//! The format is deliberately small: five known sections (`[model]`,
//! `[grid]`, `[run]`, `[output]`, `[thresholds]`), `key = value` pairs, and
//! `#`/`;` comment lines. Anything unrecognized — a stray section, an
//! unknown key, a misspelled model parameter — is an error that names its
//! line, so a typo can never silently fall back to a default. Emitting a
//! parsed configuration produces the canonical resolved form with every
//! default spelled out, and parsing that form back reproduces it verbatim.

use crate::diagnostics::Thresholds;
use crate::error::{Error, Result};
use crate::models::{param_table, resolved_params, ModelId, ModelName};
use crate::process_core::TimeGrid;

/// Grid description as configured.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Continuous { horizon: f64, dt: f64 },
    Discrete { steps: usize },
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        match *self {
            GridSpec::Continuous { horizon, dt } => TimeGrid::continuous(horizon, dt),
            GridSpec::Discrete { steps } => TimeGrid::discrete(steps),
        }
    }
}

/// Run parameters shared by the subcommands; unset optionals switch the
/// corresponding outputs off.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub seed: u64,
    /// Replications of a Monte Carlo study.
    pub reps: usize,
    /// Rate-audit exponent; enables the rate rows of `verify` and the
    /// rate-monitor statistic of `mc`.
    pub delta: Option<f64>,
    /// Critical exponent bounding `delta` and the expansion probe.
    pub delta0: f64,
    /// Probe exponent of the expansion audit.
    pub epsilon: f64,
    /// Adaptive-averaging exponent; `None` keeps the model's own weight.
    pub alpha_avg: Option<f64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            seed: 0,
            reps: 100,
            delta: None,
            delta0: 1.0,
            epsilon: 0.45,
            alpha_avg: None,
        }
    }
}

/// A fully parsed run configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: ModelId,
    pub grid: GridSpec,
    pub run: RunParams,
    pub out_dir: String,
    pub thresholds: Thresholds,
}

struct Pair {
    line: usize,
    key: String,
    value: String,
}

const SECTIONS: [&str; 5] = ["model", "grid", "run", "output", "thresholds"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigParse {
        line,
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<Vec<(String, Vec<Pair>)>> {
    let mut sections: Vec<(String, Vec<Pair>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?;
            if !SECTIONS.contains(&name) {
                return Err(parse_err(
                    line,
                    format!(
                        "unknown section `[{name}]`; expected one of [model], [grid], \
                         [run], [output], [thresholds]"
                    ),
                ));
            }
            if sections.iter().any(|(s, _)| s == name) {
                return Err(parse_err(line, format!("duplicate section `[{name}]`")));
            }
            sections.push((name.to_string(), Vec::new()));
        } else if let Some((k, v)) = trimmed.split_once('=') {
            let key = k.trim();
            let value = v.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(parse_err(
                    line,
                    format!("malformed key `{key}` (lowercase letters, digits, `_`)"),
                ));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| parse_err(line, "key before any section header"))?;
            if section.1.iter().any(|p| p.key == key) {
                return Err(parse_err(
                    line,
                    format!("duplicate key `{key}` in [{}]", section.0),
                ));
            }
            section.1.push(Pair {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        } else {
            return Err(parse_err(line, "expected `[section]` or `key = value`"));
        }
    }
    Ok(sections)
}

fn f64_of(p: &Pair) -> Result<f64> {
    p.value
        .parse()
        .map_err(|_| parse_err(p.line, format!("`{}` is not a number: `{}`", p.key, p.value)))
}

fn u64_of(p: &Pair) -> Result<u64> {
    p.value.parse().map_err(|_| {
        parse_err(
            p.line,
            format!("`{}` is not a nonnegative integer: `{}`", p.key, p.value),
        )
    })
}

fn usize_of(p: &Pair) -> Result<usize> {
    p.value.parse().map_err(|_| {
        parse_err(
            p.line,
            format!("`{}` is not a positive integer: `{}`", p.key, p.value),
        )
    })
}

fn parse_model(pairs: &[Pair]) -> Result<ModelId> {
    let name_pair = pairs
        .iter()
        .find(|p| p.key == "name")
        .ok_or_else(|| Error::ConfigInvalid("[model] needs a `name` key".into()))?;
    let name = ModelName::parse(&name_pair.value)
        .map_err(|e| parse_err(name_pair.line, e.to_string()))?;
    if name == ModelName::Custom {
        return Err(parse_err(
            name_pair.line,
            "model `custom` cannot be configured from a file; build it through the library",
        ));
    }
    let table = param_table(name)?;
    let mut id = ModelId::new(name);
    for p in pairs {
        if p.key == "name" {
            continue;
        }
        if !table.iter().any(|(k, _)| *k == p.key) {
            let known: Vec<&str> = table.iter().map(|(k, _)| *k).collect();
            return Err(parse_err(
                p.line,
                format!(
                    "`{}` is not a parameter of {name} (parameters: {})",
                    p.key,
                    known.join(", ")
                ),
            ));
        }
        id = id.with(&p.key, f64_of(p)?);
    }
    Ok(id)
}

fn parse_grid(pairs: &[Pair]) -> Result<GridSpec> {
    let kind_pair = pairs
        .iter()
        .find(|p| p.key == "kind")
        .ok_or_else(|| Error::ConfigInvalid("[grid] needs a `kind` key".into()))?;
    let allowed: &[&str] = match kind_pair.value.as_str() {
        "continuous" => &["kind", "horizon", "dt"],
        "discrete" => &["kind", "steps"],
        other => {
            return Err(parse_err(
                kind_pair.line,
                format!("unknown grid kind `{other}`; expected continuous or discrete"),
            ))
        }
    };
    for p in pairs {
        if !allowed.contains(&p.key.as_str()) {
            return Err(parse_err(
                p.line,
                format!(
                    "`{}` is not a key of {} grids (keys: {})",
                    p.key,
                    kind_pair.value,
                    allowed.join(", ")
                ),
            ));
        }
    }
    let get = |key: &str| pairs.iter().find(|p| p.key == key);
    match kind_pair.value.as_str() {
        "continuous" => {
            let horizon = f64_of(get("horizon").ok_or_else(|| {
                Error::ConfigInvalid("[grid] continuous grids need `horizon`".into())
            })?)?;
            let dt = f64_of(get("dt").ok_or_else(|| {
                Error::ConfigInvalid("[grid] continuous grids need `dt`".into())
            })?)?;
            Ok(GridSpec::Continuous { horizon, dt })
        }
        _ => {
            let steps = usize_of(get("steps").ok_or_else(|| {
                Error::ConfigInvalid("[grid] discrete grids need `steps`".into())
            })?)?;
            Ok(GridSpec::Discrete { steps })
        }
    }
}

fn parse_run(pairs: &[Pair]) -> Result<RunParams> {
    let mut run = RunParams::default();
    for p in pairs {
        match p.key.as_str() {
            "seed" => run.seed = u64_of(p)?,
            "reps" => run.reps = usize_of(p)?,
            "delta" => run.delta = Some(f64_of(p)?),
            "delta0" => run.delta0 = f64_of(p)?,
            "epsilon" => run.epsilon = f64_of(p)?,
            "alpha_avg" => run.alpha_avg = Some(f64_of(p)?),
            other => {
                return Err(parse_err(
                    p.line,
                    format!(
                        "unknown key `{other}` in [run] (keys: seed, reps, delta, \
                         delta0, epsilon, alpha_avg)"
                    ),
                ))
            }
        }
    }
    Ok(run)
}

fn parse_output(pairs: &[Pair]) -> Result<String> {
    let mut dir = "out".to_string();
    for p in pairs {
        match p.key.as_str() {
            "dir" => dir = p.value.clone(),
            other => {
                return Err(parse_err(
                    p.line,
                    format!("unknown key `{other}` in [output] (keys: dir)"),
                ))
            }
        }
    }
    Ok(dir)
}

fn parse_thresholds(pairs: &[Pair]) -> Result<Thresholds> {
    let mut th = Thresholds::default();
    for p in pairs {
        let v = f64_of(p)?;
        match p.key.as_str() {
            "flat_tail_share" => th.flat_tail_share = v,
            "divergent_tail_share" => th.divergent_tail_share = v,
            "hard_divergence" => th.hard_divergence = v,
            "bounded_ratio" => th.bounded_ratio = v,
            "unbounded_ratio" => th.unbounded_ratio = v,
            "decay_ratio" => th.decay_ratio = v,
            "growth_ratio" => th.growth_ratio = v,
            "eventual_floor" => th.eventual_floor = v,
            other => {
                return Err(parse_err(
                    p.line,
                    format!(
                        "unknown key `{other}` in [thresholds] (keys: flat_tail_share, \
                         divergent_tail_share, hard_divergence, bounded_ratio, \
                         unbounded_ratio, decay_ratio, growth_ratio, eventual_floor)"
                    ),
                ))
            }
        }
    }
    Ok(th)
}

/// Parse a configuration file.
pub fn parse_config(text: &str) -> Result<Config> {
    let sections = split_sections(text)?;
    let find = |name: &str| {
        sections
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, pairs)| pairs.as_slice())
    };
    let model = parse_model(
        find("model").ok_or_else(|| Error::ConfigInvalid("missing [model] section".into()))?,
    )?;
    let grid = parse_grid(
        find("grid").ok_or_else(|| Error::ConfigInvalid("missing [grid] section".into()))?,
    )?;
    let run = parse_run(find("run").unwrap_or(&[]))?;
    let out_dir = parse_output(find("output").unwrap_or(&[]))?;
    let thresholds = parse_thresholds(find("thresholds").unwrap_or(&[]))?;
    Ok(Config {
        model,
        grid,
        run,
        out_dir,
        thresholds,
    })
}

/// Emit the canonical resolved form: every model parameter and every
/// default spelled out, keys in a fixed order. Parsing the result
/// reproduces the configuration exactly.
pub fn emit_config(cfg: &Config) -> Result<String> {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "[model]");
    let _ = writeln!(s, "name = {}", cfg.model.name);
    for (key, value) in resolved_params(&cfg.model)? {
        let _ = writeln!(s, "{key} = {value}");
    }
    let _ = writeln!(s, "\n[grid]");
    match cfg.grid {
        GridSpec::Continuous { horizon, dt } => {
            let _ = writeln!(s, "kind = continuous");
            let _ = writeln!(s, "horizon = {horizon}");
            let _ = writeln!(s, "dt = {dt}");
        }
        GridSpec::Discrete { steps } => {
            let _ = writeln!(s, "kind = discrete");
            let _ = writeln!(s, "steps = {steps}");
        }
    }
    let _ = writeln!(s, "\n[run]");
    let _ = writeln!(s, "seed = {}", cfg.run.seed);
    let _ = writeln!(s, "reps = {}", cfg.run.reps);
    if let Some(delta) = cfg.run.delta {
        let _ = writeln!(s, "delta = {delta}");
    }
    let _ = writeln!(s, "delta0 = {}", cfg.run.delta0);
    let _ = writeln!(s, "epsilon = {}", cfg.run.epsilon);
    if let Some(alpha) = cfg.run.alpha_avg {
        let _ = writeln!(s, "alpha_avg = {alpha}");
    }
    let _ = writeln!(s, "\n[output]");
    let _ = writeln!(s, "dir = {}", cfg.out_dir);
    let th = &cfg.thresholds;
    let _ = writeln!(s, "\n[thresholds]");
    let _ = writeln!(s, "flat_tail_share = {}", th.flat_tail_share);
    let _ = writeln!(s, "divergent_tail_share = {}", th.divergent_tail_share);
    let _ = writeln!(s, "hard_divergence = {}", th.hard_divergence);
    let _ = writeln!(s, "bounded_ratio = {}", th.bounded_ratio);
    let _ = writeln!(s, "unbounded_ratio = {}", th.unbounded_ratio);
    let _ = writeln!(s, "decay_ratio = {}", th.decay_ratio);
    let _ = writeln!(s, "growth_ratio = {}", th.growth_ratio);
    let _ = writeln!(s, "eventual_floor = {}", th.eventual_floor);
    Ok(s)
}
