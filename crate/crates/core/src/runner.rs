//! Experiment orchestration: `run`, `sweep`, and `report`.
//!
//! A run directory holds `metrics.csv`, `config.json` (resolved config, seed,
//! crate version) and `summary.json`. A sweep writes one run directory per
//! value plus `frontier.csv`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EngineKind, ExperimentConfig};
use crate::engine::exact::{exact_evolve, ExactDiagnostics};
use crate::engine::mc::mc_estimate;
use crate::metrics::{self, fmt17, Convergence, EfficiencyReport, PeriodMetrics, MIN_SERIES_LEN};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub engine: EngineKind,
    pub horizon: usize,
    pub seed: u64,
    pub cum_mistakes: f64,
    pub cum_transfers: f64,
    /// Absent when the horizon is too short to fit a tail window.
    pub efficiency: Option<EfficiencyReport>,
    pub classification: Option<Convergence>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaked: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub floored: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub replications: Option<usize>,
}

/// Runs the engine named by `config` and returns the metrics series with
/// engine diagnostics (exact only).
pub fn simulate(config: &ExperimentConfig) -> Result<(Vec<PeriodMetrics>, Option<ExactDiagnostics>)> {
    config.validate()?;
    match config.engine.kind {
        EngineKind::Exact => {
            let run = exact_evolve(config)?;
            Ok((run.periods, Some(run.diagnostics)))
        }
        EngineKind::Mc => Ok((mc_estimate(config)?.periods, None)),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

/// Runs `config` and writes the result files into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    run_labeled(config, out_dir, "run")
}

fn run_labeled(config: &ExperimentConfig, out_dir: &Path, label: &str) -> Result<Summary> {
    let (series, diag) = simulate(config)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let csv = out_dir.join("metrics.csv");
    let file = fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
    metrics::write_csv(&series, BufWriter::new(file)).map_err(|e| Error::io(&csv, e))?;

    write_json(
        &out_dir.join("config.json"),
        &Sidecar {
            version: VERSION,
            seed: config.seed,
            config,
        },
    )?;

    let efficiency = if series.len() >= MIN_SERIES_LEN {
        Some(metrics::efficiency_diagnostics(&series)?)
    } else {
        None
    };
    let last = series.last();
    let summary = Summary {
        label: label.to_string(),
        engine: config.engine.kind,
        horizon: config.engine.horizon,
        seed: config.seed,
        cum_mistakes: last.map_or(0.0, |p| p.cum_mistakes),
        cum_transfers: last.map_or(0.0, |p| p.cum_transfers),
        classification: efficiency.as_ref().map(|e| e.classification),
        efficiency,
        leaked: diag.map(|d| d.leaked),
        floored: diag.map(|d| d.floored),
        replications: (config.engine.kind == EngineKind::Mc).then_some(config.engine.replications),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Parses `key=v1,v2,...`.
pub fn parse_param(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| Error::config("--param", format!("expected key=v1,v2,..., got `{spec}`")))?;
    let values: Vec<String> = list
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(Error::config("--param", format!("expected key=v1,v2,..., got `{spec}`")));
    }
    Ok((key.trim().to_string(), values))
}

/// Runs one experiment per value of `key` in parallel; each lands in
/// `out_dir/<key>=<value>`. Writes `frontier.csv` at the end.
pub fn sweep(config: &ExperimentConfig, key: &str, values: &[String], out_dir: &Path) -> Result<Vec<Summary>> {
    let configs: Vec<(String, ExperimentConfig)> = values
        .iter()
        .map(|v| Ok((format!("{key}={v}"), config.with_override(key, v)?)))
        .collect::<Result<_>>()?;
    let summaries: Vec<Summary> = configs
        .par_iter()
        .map(|(label, cfg)| run_labeled(cfg, &out_dir.join(label), label))
        .collect::<Result<_>>()?;
    report(out_dir)?;
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub label: String,
    pub cum_transfers: f64,
    pub cum_mistakes: f64,
    pub classification: Option<Convergence>,
    pub pareto: bool,
}

/// Collects every `summary.json` directly under `dir` (or in `dir` itself).
pub fn load_summaries(dir: &Path) -> Result<Vec<Summary>> {
    let mut paths: Vec<PathBuf> = Vec::new();
    let own = dir.join("summary.json");
    if own.is_file() {
        paths.push(own);
    }
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path().join("summary.json");
        if p.is_file() {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Sorts by cumulative transfers and flags the non-dominated rows. Along the
/// flagged rows mistakes strictly decrease as transfers increase.
pub fn frontier(summaries: &[Summary]) -> Vec<FrontierRow> {
    let mut rows: Vec<FrontierRow> = summaries
        .iter()
        .map(|s| FrontierRow {
            label: s.label.clone(),
            cum_transfers: s.cum_transfers,
            cum_mistakes: s.cum_mistakes,
            classification: s.classification,
            pareto: false,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.cum_transfers
            .total_cmp(&b.cum_transfers)
            .then(a.cum_mistakes.total_cmp(&b.cum_mistakes))
            .then(a.label.cmp(&b.label))
    });
    let mut best = f64::INFINITY;
    for row in rows.iter_mut() {
        if row.cum_mistakes < best {
            row.pareto = true;
            best = row.cum_mistakes;
        }
    }
    rows
}

pub const FRONTIER_HEADER: &str = "label,cum_transfers,cum_mistakes,classification,pareto";

/// Writes `frontier.csv` for the summaries found under `dir`.
pub fn report(dir: &Path) -> Result<Vec<FrontierRow>> {
    let summaries = load_summaries(dir)?;
    if summaries.is_empty() {
        return Err(Error::Parse {
            path: dir.to_path_buf(),
            message: "no summary.json found".into(),
        });
    }
    let rows = frontier(&summaries);
    let mut text = String::from(FRONTIER_HEADER);
    text.push('\n');
    for r in &rows {
        let class = r.classification.map(|c| c.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.label,
            fmt17(r.cum_transfers),
            fmt17(r.cum_mistakes),
            class,
            r.pareto
        ));
    }
    let path = dir.join("frontier.csv");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
