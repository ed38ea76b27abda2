//! Benchmark sweeps: pbks lookup, gap computation, per-run records and
//! per-(algorithm, alpha) summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{parse_instance, InstanceFormat};
use crate::solvers::{solve, validate_solution, Algorithm, SolveParams};
use crate::splitting::CloseMode;

pub const BUNDLED_PBKS: &str = include_str!("../data/pbks.csv");
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("pbks must be positive, got {0}")]
    NonpositivePbks(f64),
    #[error("pbks table line {line}: {reason}")]
    Pbks { line: usize, reason: String },
    #[error("{0}")]
    Io(String),
    #[error("csv output: {0}")]
    Csv(String),
}

/// `(result - pbks) / pbks`.
pub fn compute_gap(result: f64, pbks: f64) -> Result<f64, BenchError> {
    if !(pbks > 0.0) {
        return Err(BenchError::NonpositivePbks(pbks));
    }
    Ok((result - pbks) / pbks)
}

/// Lookup key: lowercase, with the multiplication sign spelled `x`.
fn normalize(name: &str) -> String {
    name.trim().replace('×', "x").to_ascii_lowercase()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PbksTable {
    values: BTreeMap<String, (String, f64)>,
}

impl PbksTable {
    /// Parses `name,pbks[,source]` rows; `#` lines and a `name,...` header are skipped.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.to_ascii_lowercase().starts_with("name,") {
                continue;
            }
            let err = |reason: String| BenchError::Pbks { line: i + 1, reason };
            let mut cols = line.split(',');
            let name = cols.next().unwrap_or("").trim();
            let value: f64 = cols
                .next()
                .ok_or_else(|| err("missing pbks column".into()))?
                .trim()
                .parse()
                .map_err(|e| err(format!("bad pbks value: {e}")))?;
            if name.is_empty() {
                return Err(err("empty instance name".into()));
            }
            if !(value > 0.0) {
                return Err(err(format!("pbks must be positive, got {value}")));
            }
            if values.insert(normalize(name), (name.to_string(), value)).is_some() {
                return Err(err(format!("duplicate instance `{name}`")));
            }
        }
        Ok(PbksTable { values })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Table shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_PBKS).expect("bundled pbks table parses")
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(&normalize(name)).map(|v| v.1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.values().map(|v| v.0.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub alg: String,
    pub alpha: f64,
    pub theta: f64,
    pub mode: String,
    pub splittable: bool,
    pub total: Option<f64>,
    pub routing: Option<f64>,
    pub opening: Option<f64>,
    pub opened: Option<usize>,
    pub gap: Option<f64>,
    pub time_ms: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub alg: String,
    pub alpha: f64,
    pub instances: usize,
    pub average_gap: Option<f64>,
    pub average_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub instances: PathBuf,
    pub format: InstanceFormat,
    pub pbks: PbksTable,
    pub algs: Vec<Algorithm>,
    pub alphas: Vec<f64>,
    pub theta: f64,
    pub mode: CloseMode,
    pub splittable: bool,
    pub timeout: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// `(instance, message)` for every failed run or unreadable file.
    pub failures: Vec<(String, String)>,
}

fn list_instances(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let entries = fs::read_dir(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    Ok(files)
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

enum Outcome {
    Done { total: f64, routing: f64, opening: f64, opened: usize, ms: f64 },
    Failed(String),
    TimedOut,
}

fn run_with_timeout(inst: std::sync::Arc<crate::Instance>, params: SolveParams<f64>, timeout: Duration) -> Outcome {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let start = Instant::now();
        let res = solve(&inst, &params).map_err(|e| e.to_string()).and_then(|sol| {
            let report = validate_solution(&inst, &sol, params.splittable);
            if report.is_ok() {
                Ok(sol)
            } else {
                Err(format!("invalid solution: {}", report.violations.join("; ")))
            }
        });
        let _ = tx.send((res, start.elapsed()));
    });
    match rx.recv_timeout(timeout) {
        Ok((Ok(sol), el)) => Outcome::Done {
            total: sol.total(),
            routing: sol.routing_cost,
            opening: sol.opening_cost,
            opened: sol.opened.len(),
            ms: el.as_secs_f64() * 1e3,
        },
        Ok((Err(msg), _)) => Outcome::Failed(msg),
        Err(_) => Outcome::TimedOut,
    }
}

/// Runs every (instance, algorithm, alpha) combination. Instances are solved
/// in parallel; records keep input order with alphas ascending.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutcome, BenchError> {
    let files = list_instances(&cfg.instances)?;
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let per_file: Vec<(Vec<RunRecord>, Vec<(String, String)>)> = files
        .par_iter()
        .map(|path| {
            let name = instance_name(path);
            let mut records = Vec::new();
            let mut failures = Vec::new();
            let inst = match parse_instance::<f64>(path, cfg.format) {
                Ok(i) => std::sync::Arc::new(i),
                Err(e) => {
                    failures.push((name, e.to_string()));
                    return (records, failures);
                }
            };
            let pbks = cfg.pbks.get(&name);
            for &alg in &cfg.algs {
                let splittable = cfg.splittable || alg == Algorithm::Path;
                for &alpha in &alphas {
                    let params = SolveParams { alg, alpha, theta: cfg.theta, mode: cfg.mode, splittable };
                    let mut rec = RunRecord {
                        instance: name.clone(),
                        alg: alg.to_string(),
                        alpha,
                        theta: cfg.theta,
                        mode: cfg.mode.to_string(),
                        splittable,
                        total: None,
                        routing: None,
                        opening: None,
                        opened: None,
                        gap: None,
                        time_ms: 0.0,
                        status: "ok".into(),
                    };
                    match run_with_timeout(inst.clone(), params, cfg.timeout) {
                        Outcome::Done { total, routing, opening, opened, ms } => {
                            rec.total = Some(total);
                            rec.routing = Some(routing);
                            rec.opening = Some(opening);
                            rec.opened = Some(opened);
                            rec.gap = pbks.and_then(|p| compute_gap(total, p).ok());
                            rec.time_ms = ms;
                        }
                        Outcome::Failed(msg) => {
                            rec.status = "error".into();
                            failures.push((name.clone(), msg));
                        }
                        Outcome::TimedOut => {
                            rec.status = "timeout".into();
                            rec.time_ms = cfg.timeout.as_secs_f64() * 1e3;
                            failures.push((name.clone(), format!("timed out after {:?}", cfg.timeout)));
                        }
                    }
                    records.push(rec);
                }
            }
            (records, failures)
        })
        .collect();

    let mut out = BenchOutcome::default();
    for (r, f) in per_file {
        out.records.extend(r);
        out.failures.extend(f);
    }
    out.summary = summarize(&out.records);
    Ok(out)
}

/// One row per (algorithm, alpha) over successful records.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<((String, f64), Vec<&RunRecord>)> = Vec::new();
    for r in records.iter().filter(|r| r.status == "ok") {
        match groups.iter_mut().find(|(k, _)| k.0 == r.alg && k.1 == r.alpha) {
            Some((_, list)) => list.push(r),
            None => groups.push(((r.alg.clone(), r.alpha), vec![r])),
        }
    }
    groups.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    groups
        .into_iter()
        .map(|((alg, alpha), list)| {
            let gaps: Vec<f64> = list.iter().filter_map(|r| r.gap).collect();
            SummaryRow {
                alg,
                alpha,
                instances: list.len(),
                average_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
                average_time_ms: list.iter().map(|r| r.time_ms).sum::<f64>() / list.len() as f64,
            }
        })
        .collect()
}

/// Writes records with the fixed column order.
pub fn write_records<W: std::io::Write>(out: W, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "instance",
        "alg",
        "alpha",
        "theta",
        "mode",
        "splittable",
        "total",
        "routing",
        "opening",
        "opened",
        "gap",
        "time_ms",
        "status",
    ])
    .map_err(|e| BenchError::Csv(e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn write_summary<W: std::io::Write>(out: W, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["alg", "alpha", "instances", "average_gap", "average_time_ms"])
        .map_err(|e| BenchError::Csv(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}
