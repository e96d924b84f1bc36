//! Grid sweeps over config keys.
//!
//! Points are the cartesian product of the sweep axes, first axis slowest,
//! and are keyed by their index. While a sweep runs, the output file holds a
//! partial record: a `#` header naming the config hash, then finished rows
//! in completion order. Re-running the same config skips finished points, and
//! the final rewrite orders rows by point index, so an interrupted and resumed
//! sweep ends byte-identical to an uninterrupted one.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use spinbus::protocols::{Cell, ExperimentKind, ExperimentResult, Provenance};

use crate::config::Config;
use crate::error::CliError;
use crate::experiments;
use crate::output::{format_cell, parse_cell, read_result, row_line, split_csv, split_record};

const PARTIAL_MARK: &str = "spinbus-sweep partial";

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    /// Discard any existing record at the output path.
    pub restart: bool,
    /// Stop after this many newly computed points.
    pub limit: Option<usize>,
}

#[derive(Debug)]
pub enum SweepOutcome {
    Complete(ExperimentResult),
    /// `limit` reached; the partial record stays at the output path.
    Incomplete {
        done: usize,
        total: usize,
    },
}

/// Rows of one finished point, already in printed form.
#[derive(Debug, Clone, PartialEq)]
struct PointRows {
    failed: bool,
    rows: Vec<String>,
    warnings: Vec<String>,
}

pub fn points(cfg: &Config) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in cfg.sweep_axes() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

fn columns(cfg: &Config, kind: ExperimentKind) -> Vec<String> {
    let mut c = vec!["point".to_string()];
    c.extend(cfg.sweep_axes().iter().map(|(k, _)| format!("sweep.{k}")));
    c.push("point_status".into());
    c.extend(experiments::columns(kind).iter().map(|s| s.to_string()));
    c.push("point_error".into());
    c
}

fn run_point(
    cfg: &Config,
    kind: ExperimentKind,
    index: usize,
    assignment: &[(String, String)],
) -> PointRows {
    let width = experiments::columns(kind).len();
    let mut head: Vec<Cell> = vec![index.into()];
    head.extend(assignment.iter().map(|(_, v)| parse_cell(v)));
    let outcome = cfg
        .at_point(assignment)
        .and_then(|c| experiments::run(kind, &c));
    match outcome {
        Ok(r) => PointRows {
            failed: false,
            rows: r
                .rows
                .iter()
                .map(|row| {
                    let mut cells = head.clone();
                    cells.push("ok".into());
                    cells.extend(row.iter().cloned());
                    cells.push("".into());
                    row_line(&cells)
                })
                .collect(),
            warnings: r.warnings,
        },
        Err(e) => {
            let mut cells = head;
            cells.push("failed".into());
            cells.extend(std::iter::repeat_n(Cell::Text(String::new()), width));
            cells.push(e.to_string().replace('\n', " ").into());
            PointRows {
                failed: true,
                rows: vec![row_line(&cells)],
                warnings: Vec::new(),
            }
        }
    }
}

/// Loads finished points from an existing record with the same hash.
fn load_existing(
    path: &Path,
    hash: &str,
    restart: bool,
) -> Result<BTreeMap<usize, PointRows>, CliError> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Ok(BTreeMap::new());
    };
    if restart || text.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let mismatch = || {
        CliError::validation(format!(
            "{} holds results of a different configuration; pass --restart to overwrite it",
            path.display()
        ))
    };
    let mut done: BTreeMap<usize, PointRows> = BTreeMap::new();
    if text.starts_with(&format!("# {PARTIAL_MARK}")) {
        let parts = split_csv(&text);
        let file_hash = parts
            .header
            .iter()
            .find(|(k, _)| k == "config_sha256")
            .map(|(_, v)| v.as_str());
        if file_hash != Some(hash) {
            return Err(mismatch());
        }
        for (k, v) in &parts.header {
            if k == "point-warning" {
                if let Some((i, w)) = v.split_once(": ") {
                    if let Ok(i) = i.parse::<usize>() {
                        done.entry(i)
                            .or_insert_with(empty)
                            .warnings
                            .push(w.to_string());
                    }
                }
            }
        }
        for line in parts.body {
            let fields = split_record(line)?;
            let index: usize = fields[0].parse().map_err(|_| mismatch())?;
            let entry = done.entry(index).or_insert_with(empty);
            entry.failed |= fields.iter().any(|f| f == "failed");
            entry.rows.push(line.to_string());
        }
        // each point goes out in a single write; failed points are rerun
        done.retain(|_, p| !p.failed && !p.rows.is_empty());
        return Ok(done);
    }
    let r = read_result(&text).map_err(|_| mismatch())?;
    if r.provenance
        .parameters
        .get("config_sha256")
        .map(String::as_str)
        != Some(hash)
    {
        return Err(mismatch());
    }
    for row in &r.rows {
        let Some(Cell::Int(i)) = row.first() else {
            return Err(mismatch());
        };
        let entry = done.entry(*i as usize).or_insert_with(empty);
        entry.failed |= row.iter().any(|c| *c == Cell::Text("failed".into()));
        entry.rows.push(row_line(row));
    }
    for w in &r.warnings {
        if let Some((i, w)) = w.strip_prefix("point ").and_then(|s| s.split_once(": ")) {
            if let Ok(i) = i.parse::<usize>() {
                done.entry(i)
                    .or_insert_with(empty)
                    .warnings
                    .push(w.to_string());
            }
        }
    }
    done.retain(|_, p| !p.failed && !p.rows.is_empty());
    Ok(done)
}

fn empty() -> PointRows {
    PointRows {
        failed: false,
        rows: Vec::new(),
        warnings: Vec::new(),
    }
}

fn partial_header(hash: &str, cols: &[String], done: &BTreeMap<usize, PointRows>) -> String {
    let mut s = format!("# {PARTIAL_MARK}\n# config_sha256: {hash}\n");
    for (i, p) in done {
        for w in &p.warnings {
            s.push_str(&format!("# point-warning: {i}: {w}\n"));
        }
    }
    s.push_str(&format!("# columns: {}\n", cols.join(",")));
    for p in done.values() {
        for r in &p.rows {
            s.push_str(r);
            s.push('\n');
        }
    }
    s
}

/// Rough work estimate: density-matrix entries times time samples times
/// integrations per point.
pub fn cost_estimate(cfg: &Config, kind: ExperimentKind, pts: &[Vec<(String, String)>]) -> f64 {
    pts.iter()
        .map(|a| {
            let Ok(c) = cfg.at_point(a) else { return 0.0 };
            let dim = experiments::state_dim(&c, kind).unwrap_or(0) as f64;
            let samples = c.search().map(|s| s.points).unwrap_or(600) as f64;
            let runs = match kind {
                ExperimentKind::Threshold | ExperimentKind::FtThreshold => 12.0,
                ExperimentKind::Disorder => c.disorder().map(|d| d.runs).unwrap_or(100) as f64,
                ExperimentKind::Modes => 0.0,
                _ => 1.0,
            };
            dim * samples * runs
        })
        .sum()
}

pub fn run(
    cfg: &Config,
    opts: &SweepOptions,
    log: &mut dyn FnMut(&str),
) -> Result<SweepOutcome, CliError> {
    let kind_name = cfg
        .get("experiment")
        .ok_or_else(|| CliError::validation("sweep needs `experiment`"))?;
    let kind = ExperimentKind::parse(kind_name)
        .ok_or_else(|| CliError::validation(format!("unknown experiment `{kind_name}`")))?;
    let pts = points(cfg);
    // validate every point before any computation starts
    for a in &pts {
        let c = cfg.at_point(a)?;
        c.chain()?;
        c.search()?;
    }
    let hash = cfg.hash();
    let cols = columns(cfg, kind);
    let path = cfg.get("output").map(Path::new);
    let mut done = match path {
        Some(p) => load_existing(p, &hash, opts.restart)?,
        None => BTreeMap::new(),
    };
    let pending: Vec<usize> = (0..pts.len()).filter(|i| !done.contains_key(i)).collect();
    log(&format!(
        "sweep: {} points over {} axes, {} finished, {} to run; estimated cost {:.2e} state-entry samples",
        pts.len(),
        cfg.sweep_axes().len(),
        done.len(),
        pending.len(),
        cost_estimate(cfg, kind, &pending.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>())
    ));
    let batch: Vec<usize> = match opts.limit {
        Some(k) => pending.iter().copied().take(k).collect(),
        None => pending.clone(),
    };
    let sink = match path {
        Some(p) => {
            std::fs::write(p, partial_header(&hash, &cols, &done))
                .map_err(|e| CliError::io(format!("writing {}", p.display()), e))?;
            let f = OpenOptions::new()
                .append(true)
                .open(p)
                .map_err(|e| CliError::io(format!("opening {}", p.display()), e))?;
            Some(Mutex::new(f))
        }
        None => None,
    };
    let work = || -> Result<Vec<(usize, PointRows)>, CliError> {
        batch
            .par_iter()
            .map(|&i| {
                let p = run_point(cfg, kind, i, &pts[i]);
                if let Some(sink) = &sink {
                    let mut chunk = String::new();
                    for w in &p.warnings {
                        // warnings ride along as header-style lines
                        chunk
                            .push_str(&format!("# point-warning: {i}: {}\n", w.replace('\n', " ")));
                    }
                    for r in &p.rows {
                        chunk.push_str(r);
                        chunk.push('\n');
                    }
                    let mut f = sink.lock().expect("sink lock");
                    f.write_all(chunk.as_bytes())
                        .and_then(|_| f.flush())
                        .map_err(|e| CliError::io("appending to the sweep record", e))?;
                }
                Ok((i, p))
            })
            .collect()
    };
    let fresh = match opts.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| CliError::validation(format!("cannot start {k} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let failed = fresh.iter().filter(|(_, p)| p.failed).count();
    for (i, p) in fresh {
        done.insert(i, p);
    }
    if done.len() < pts.len() {
        return Ok(SweepOutcome::Incomplete {
            done: done.iter().filter(|(_, p)| !p.failed).count(),
            total: pts.len(),
        });
    }
    if failed > 0 {
        log(&format!("sweep: {failed} points failed"));
    }
    Ok(SweepOutcome::Complete(assemble(
        cfg, kind, cols, &hash, &done,
    )?))
}

fn assemble(
    cfg: &Config,
    kind: ExperimentKind,
    columns: Vec<String>,
    hash: &str,
    done: &BTreeMap<usize, PointRows>,
) -> Result<ExperimentResult, CliError> {
    let chain = cfg.chain().ok();
    let mut prov = Provenance::new(chain.as_ref(), None, cfg.integrator().ok().as_ref())
        .param("config_sha256", hash)
        .param("experiment", kind.name());
    for (k, vs) in cfg.sweep_axes() {
        prov = prov.param(&format!("sweep.{k}"), vs.join(","));
    }
    if kind == ExperimentKind::Disorder {
        prov.seed = cfg.seed().ok();
    }
    let mut r = ExperimentResult::new(kind, &[], prov);
    r.columns = columns;
    let mut failed = 0usize;
    for (i, p) in done {
        failed += usize::from(p.failed);
        for line in &p.rows {
            r.rows
                .push(split_record(line)?.iter().map(|f| parse_cell(f)).collect());
        }
        for w in &p.warnings {
            r.warnings.push(format!("point {i}: {w}"));
        }
    }
    r.set("points", done.len());
    r.set("failed_points", failed);
    debug_assert!(r
        .rows
        .iter()
        .all(|row| row.iter().map(format_cell).count() == r.columns.len()));
    Ok(r)
}
