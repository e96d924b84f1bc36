//! Experiment runner for the `spinbus` simulator.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

use spinbus::protocols::ExperimentKind;

use config::Config;
use error::CliError;
use sweep::{SweepOptions, SweepOutcome};

/// Settings gathered from `--key value` pairs after the subcommand.
#[derive(Debug, Default)]
pub struct Invocation {
    pub config_file: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
    pub sweeps: Vec<(String, String)>,
    pub sweep: SweepOptions,
}

/// Parses `--key value` and `--key=value` tokens. `--restart` takes no value.
pub fn parse_settings(tokens: &[String]) -> Result<Invocation, CliError> {
    let mut inv = Invocation::default();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let body = tok.strip_prefix("--").ok_or_else(|| {
            CliError::validation(format!("expected `--key value`, found `{tok}`"))
        })?;
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        let key = config::normalize_key(&key);
        if key == "restart" {
            inv.sweep.restart = true;
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .cloned()
                .ok_or_else(|| CliError::validation(format!("`--{key}` needs a value")))?,
        };
        match key.as_str() {
            "config" => inv.config_file = Some(PathBuf::from(value)),
            "workers" => {
                let k: usize = value.parse().ok().filter(|&k| k > 0).ok_or_else(|| {
                    CliError::validation("`--workers` must be a positive integer")
                })?;
                inv.sweep.workers = Some(k);
            }
            "limit" => {
                inv.sweep.limit = Some(value.parse().map_err(|_| {
                    CliError::validation("`--limit` must be a non-negative integer")
                })?)
            }
            "sweep" => {
                let (k, list) = value
                    .split_once('=')
                    .ok_or_else(|| CliError::validation("`--sweep` takes `key=v1,v2,...`"))?;
                inv.sweeps.push((k.to_string(), list.to_string()));
            }
            _ => {
                if !config::is_known(&key) {
                    return Err(CliError::validation(format!("unknown key `{key}`")));
                }
                inv.overrides.push((key, value));
            }
        }
    }
    Ok(inv)
}

/// File values first, then flags on top.
pub fn load_config(inv: &Invocation) -> Result<Config, CliError> {
    let mut cfg = match &inv.config_file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::io(format!("reading {}", p.display()), e))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for (k, v) in &inv.overrides {
        cfg.set(k, v)?;
    }
    for (k, list) in &inv.sweeps {
        cfg.add_sweep(k, list)?;
    }
    Ok(cfg)
}

/// Runs one experiment kind, or a sweep when `kind` is `None`. Progress
/// messages go through `log`.
pub fn execute(
    kind: Option<ExperimentKind>,
    tokens: &[String],
    log: &mut dyn FnMut(&str),
) -> Result<(), CliError> {
    let inv = parse_settings(tokens)?;
    let cfg = load_config(&inv)?;
    let format = cfg.format()?;
    let path = cfg.get("output").map(PathBuf::from);
    match kind {
        Some(kind) => {
            if !cfg.sweep_axes().is_empty() {
                return Err(CliError::validation(
                    "sweep axes given; use the `sweep` subcommand",
                ));
            }
            if inv.sweep.workers.is_some() || inv.sweep.restart || inv.sweep.limit.is_some() {
                return Err(CliError::validation(
                    "--workers, --restart and --limit apply to sweeps only",
                ));
            }
            if let Some(k) = cfg.get("experiment") {
                if ExperimentKind::parse(k) != Some(kind) {
                    return Err(CliError::validation(format!(
                        "config names experiment `{k}` but `{}` was requested",
                        kind.name()
                    )));
                }
            }
            let r = experiments::run(kind, &cfg)?;
            for w in &r.warnings {
                log(&format!("warning: {w}"));
            }
            output::write(path.as_deref(), &output::render(&r, format))
        }
        None => match sweep::run(&cfg, &inv.sweep, log)? {
            SweepOutcome::Complete(r) => {
                output::write(path.as_deref(), &output::render(&r, format))
            }
            SweepOutcome::Incomplete { done, total } => {
                log(&format!(
                    "sweep: stopped with {done} of {total} points finished; rerun to resume"
                ));
                Ok(())
            }
        },
    }
}

/// `key  description` lines for help output.
pub fn key_help() -> String {
    let mut s = String::from("Configuration keys (file `key = value` or flag `--key value`):\n");
    for (k, d) in config::KEYS {
        s.push_str(&format!("  {k:<18} {d}\n"));
    }
    s.push_str("Sweep axes: `sweep.<key> = v1,v2` in a file or `--sweep <key>=v1,v2`; `a:b:step` ranges expand.\n");
    s
}
