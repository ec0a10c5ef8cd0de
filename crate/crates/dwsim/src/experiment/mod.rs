//! Config-driven batch runs writing CSV tables and a JSON manifest.

mod config;
mod kinds;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{ChainConfig, Ensemble, ExperimentConfig, FieldError, Kind, NoiseConfig, Times, SWEEP_PARAMETERS};
pub use kinds::{fock_occupations, resolve, stroboscopic, GroupOutput, Resolved};
pub use output::{format_float, write_atomic, Cell, FileRecord, OutputSet, ResultManifest, RunRecord, Schema, Table};

use crate::error::Error;
use crate::exec::{self, Execution};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug)]
pub enum ExperimentError {
    Validation(Vec<FieldError>),
    Runtime(Error),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Validation(errs) => {
                writeln!(f, "invalid configuration:")?;
                for e in errs {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            ExperimentError::Runtime(e) => write!(f, "run failed: {e}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<Error> for ExperimentError {
    fn from(e: Error) -> Self {
        ExperimentError::Runtime(e)
    }
}

/// Grid points in name order, the last name varying fastest.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<BTreeMap<String, f64>> {
    let mut points = vec![BTreeMap::new()];
    for (name, vals) in &cfg.sweep {
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Field errors plus problems only visible once sweep points are resolved.
pub fn validate(cfg: &ExperimentConfig) -> Vec<FieldError> {
    let mut errs = cfg.validate();
    if errs.is_empty() {
        for p in sweep_points(cfg) {
            if let Err(e) = resolve(cfg, &p) {
                errs.push(FieldError { field: "sweep".into(), message: format!("{p:?}: {e}") });
                break;
            }
        }
    }
    errs
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Least-squares slope of ln y against ln |x|.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x != 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.abs().ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultManifest, ExperimentError> {
    run_experiment_with(cfg, Execution::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ResultManifest, ExperimentError> {
    let errs = validate(cfg);
    if !errs.is_empty() {
        return Err(ExperimentError::Validation(errs));
    }
    let started = now();
    let points = sweep_points(cfg);
    let single = points.len() == 1;
    let indexed: Vec<(usize, &BTreeMap<String, f64>)> = points.iter().enumerate().collect();
    let results = exec::map(exec, &indexed, |&(group, p)| {
        let t = Instant::now();
        let r = resolve(cfg, p)?;
        let ctx = kinds::Ctx { cfg, r: &r, exec, prefix: if single { String::new() } else { format!("g{group:03}_") } };
        kinds::run_kind(&ctx).map(|o| (o, t.elapsed().as_secs_f64()))
    });
    let mut out = OutputSet::create(&cfg.output)?;
    match write_all(cfg, &points, results, &mut out, started) {
        Ok(m) => Ok(m),
        Err(e) => {
            out.clean_up();
            Err(e.into())
        }
    }
}

fn write_all(
    cfg: &ExperimentConfig,
    points: &[BTreeMap<String, f64>],
    results: Vec<crate::Result<(GroupOutput, f64)>>,
    out: &mut OutputSet,
    started: f64,
) -> crate::Result<ResultManifest> {
    let mut runs = Vec::new();
    for (group, (p, res)) in points.iter().zip(results).enumerate() {
        let (g, secs) = res?;
        let files = g.tables.iter().map(|t| out.emit(t)).collect::<crate::Result<Vec<_>>>()?;
        runs.push(RunRecord { group, parameters: p.clone(), files, wall_clock_s: secs, summary: g.summary, labels: g.labels });
    }
    let keys: BTreeSet<String> = runs.iter().flat_map(|r| r.summary.keys().cloned()).collect();
    let mut summary = BTreeMap::new();
    let mut files = Vec::new();
    if runs.len() == 1 {
        summary = runs[0].summary.clone();
    } else {
        let names: Vec<String> = cfg.sweep.keys().cloned().collect();
        let mut cols = vec!["group".to_string()];
        cols.extend(names.iter().cloned());
        cols.extend(keys.iter().cloned());
        let mut t = Table::new("summary.csv", Schema::Custom(cols));
        for r in &runs {
            let mut row: Vec<Cell> = vec![r.group.into()];
            row.extend(names.iter().map(|n| Cell::F(r.parameters[n])));
            row.extend(keys.iter().map(|k| Cell::F(r.summary.get(k).copied().unwrap_or(f64::NAN))));
            t.push(row);
        }
        files.push(out.emit(&t)?);
        for k in &keys {
            let v: Vec<f64> = runs.iter().filter_map(|r| r.summary.get(k).copied()).collect();
            summary.insert(format!("mean_{k}"), v.iter().sum::<f64>() / v.len() as f64);
        }
        // power-law exponents along a single J or alpha axis
        if cfg.sweep.len() == 1 {
            let (axis, xs) = cfg.sweep.iter().next().unwrap();
            if axis == "J" || axis == "alpha" {
                for k in keys.iter().filter(|k| k.starts_with("infidelity")) {
                    let ys: Vec<f64> = runs.iter().map(|r| r.summary.get(k).copied().unwrap_or(f64::NAN)).collect();
                    if let Some(s) = loglog_slope(xs, &ys) {
                        summary.insert(format!("beta_{k}"), -s);
                    }
                }
            }
        }
    }
    let manifest = ResultManifest {
        config: cfg.clone(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started,
        finished_unix_s: now(),
        runs,
        files,
        summary,
    };
    out.emit_json(MANIFEST, &manifest)?;
    manifest.verify(&out.dir)?;
    Ok(manifest)
}
