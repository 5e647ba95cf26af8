//! Batches of independent runs and parameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::netsim::{RunError, RunResult, Simulation};
use crate::scenario::{ConfigError, ConfigErrors, ScenarioConfig};
use crate::stats::REPORTED_QUANTILES;

/// One simulation of a batch.
#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Output directory name for the configuration.
    pub label: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub trace: bool,
}

impl RunSpec {
    pub fn new(label: impl Into<String>, config: ScenarioConfig, seed: u64) -> Self {
        RunSpec {
            label: label.into(),
            config,
            seed,
            trace: false,
        }
    }

    /// `<out>/<label>/<seed>`
    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join(&self.label).join(self.seed.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
    #[error("{0}")]
    Config(ConfigErrors),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Runs one spec; writes its outputs under `out` when given.
pub fn execute(spec: &RunSpec, out: Option<&Path>) -> Result<RunResult, BatchError> {
    let mut sim = Simulation::new(&spec.config, spec.seed).map_err(RunError::from)?;
    let dir = out.map(|o| spec.dir(o));
    if let Some(d) = &dir {
        fs::create_dir_all(d).map_err(|e| BatchError::Io(d.clone(), e))?;
        if spec.trace {
            let p = d.join("trace.log");
            let f = fs::File::create(&p).map_err(|e| BatchError::Io(p, e))?;
            sim = sim.with_trace(Box::new(io::BufWriter::new(f)));
        }
    }
    let result = sim.run()?;
    if let Some(d) = &dir {
        result.report.export(d).map_err(|e| BatchError::Io(d.clone(), e))?;
    }
    Ok(result)
}

/// Runs every spec with at most `jobs` worker threads (0 = all cores).
/// Results come back in input order regardless of completion order.
#[cfg(feature = "parallel")]
pub fn run_batch(specs: &[RunSpec], jobs: usize, out: Option<&Path>) -> Vec<Result<RunResult, BatchError>> {
    use rayon::prelude::*;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            return specs.iter().map(|_| Err(BatchError::Pool(e.to_string()))).collect();
        }
    };
    pool.install(|| specs.par_iter().map(|s| execute(s, out)).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch(specs: &[RunSpec], _jobs: usize, out: Option<&Path>) -> Vec<Result<RunResult, BatchError>> {
    run_batch_sequential(specs, out)
}

pub fn run_batch_sequential(specs: &[RunSpec], out: Option<&Path>) -> Vec<Result<RunResult, BatchError>> {
    specs.iter().map(|s| execute(s, out)).collect()
}

/// min / median / max of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Spread {
    /// Median of an even count is the mean of the two middle values.
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Spread {
            min: v[0],
            median,
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub flow: String,
    /// Quantile label (`p50_us`, ...) and its spread in microseconds.
    pub quantiles: Vec<(&'static str, Spread)>,
}

/// Sweep plan: one spec per (value, seed), values outermost. Seeds are
/// `run.seed, run.seed + 1, ...` of each overridden configuration.
pub fn sweep_specs(
    base: &ScenarioConfig,
    key: &str,
    values: &[String],
    seeds: u64,
) -> Result<Vec<(String, RunSpec)>, BatchError> {
    if values.is_empty() {
        return Err(BatchError::Config(ConfigErrors(vec![ConfigError {
            line: None,
            message: "sweep needs at least one value".into(),
        }])));
    }
    let mut out = Vec::new();
    for v in values {
        let cfg = base.with_override(key, v).map_err(BatchError::Config)?;
        let label = cfg.hash_hex();
        for seed in cfg.run.seed..cfg.run.seed + seeds {
            out.push((v.clone(), RunSpec::new(label.clone(), cfg.clone(), seed)));
        }
    }
    Ok(out)
}

/// Aggregates finished sweep runs into one row per (value, flow).
pub fn sweep_rows(values: &[String], runs: &[(String, RunResult)]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for v in values {
        let mine: Vec<&RunResult> = runs.iter().filter(|(x, _)| x == v).map(|(_, r)| r).collect();
        let Some(first) = mine.first() else {
            continue;
        };
        for f in &first.report.flows {
            let quantiles = REPORTED_QUANTILES
                .iter()
                .filter_map(|&(q, label)| {
                    let per_seed: Vec<f64> = mine
                        .iter()
                        .filter_map(|r| r.report.flow(&f.name))
                        .filter_map(|fl| fl.delays.quantile(q).ok())
                        .map(|e| e.value.as_micros_f64())
                        .collect();
                    Spread::of(&per_seed).map(|s| (label, s))
                })
                .collect();
            rows.push(SweepRow {
                value: v.clone(),
                flow: f.name.clone(),
                quantiles,
            });
        }
    }
    rows
}

pub fn sweep_table(key: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{key},flow");
    for (_, label) in REPORTED_QUANTILES {
        let _ = write!(s, ",{label}_min,{label}_median,{label}_max");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{}", r.value, r.flow);
        for (_, label) in REPORTED_QUANTILES {
            match r.quantiles.iter().find(|(l, _)| *l == label) {
                Some((_, sp)) => {
                    let _ = write!(s, ",{:.3},{:.3},{:.3}", sp.min, sp.median, sp.max);
                }
                None => s.push_str(",-,-,-"),
            }
        }
        s.push('\n');
    }
    s
}
