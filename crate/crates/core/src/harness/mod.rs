//! Trials, sweeps and output files.

mod config;
mod emit;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adversary::JamSchedule;
use crate::engine::{simulate, EngineError, Observer};
use crate::metrics::{
    competitiveness_report, CompetitivenessReport, MetricsError, SafetyContext, SafetyMonitor, TraceWriter,
    TrialSummary,
};
use crate::rng::trial_seed;

pub use config::{sweep_points, Axis, ConfigError, ExperimentConfig, DEFAULT_MAX_SLOTS};
pub use emit::{
    code_version, emit_run, emit_sweep, summary_csv, summary_json, Format, Manifest, SweepSpec,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("nothing to emit")]
    Empty,
}

/// Trace file for trial `k`, when traces are on.
pub fn trace_path(dir: &Path, tag: Option<usize>, k: u64) -> PathBuf {
    match tag {
        Some(p) => dir.join(format!("trace_p{p}_{k}.csv")),
        None => dir.join(format!("trace_{k}.csv")),
    }
}

/// Runs trial `k` of `cfg` against a precompiled schedule, feeding every
/// event to `extra` as well as to the safety monitor.
pub fn run_trial_with<O: Observer>(
    cfg: &ExperimentConfig,
    schedule: &JamSchedule,
    k: u64,
    extra: &mut O,
) -> Result<TrialSummary, HarnessError> {
    let params = cfg.params();
    let seed = trial_seed(cfg.seed, k);
    let mut obs = (SafetyMonitor::new(SafetyContext::for_params(&params)), extra);
    let run = simulate(&params, schedule, seed, cfg.max_slots, &mut obs)?;
    let violations = obs.0.finish()?;
    Ok(TrialSummary::new(k, &params, seed, run, violations))
}

fn run_one(
    cfg: &ExperimentConfig,
    schedule: &JamSchedule,
    k: u64,
    trace: Option<PathBuf>,
) -> Result<TrialSummary, HarnessError> {
    match trace {
        None => run_trial_with(cfg, schedule, k, &mut ()),
        Some(path) => {
            let mut w = TraceWriter::create(&path, k)?;
            let s = run_trial_with(cfg, schedule, k, &mut w)?;
            w.finish()?;
            Ok(s)
        }
    }
}

/// Validates `cfg` and runs trial `k`. Writes `trace_<k>.csv` into the
/// output directory when traces are enabled.
pub fn run_trial(cfg: &ExperimentConfig, k: u64) -> Result<TrialSummary, HarnessError> {
    let schedule = cfg.validate()?;
    let trace = trace_target(cfg, None, k)?;
    run_one(cfg, &schedule, k, trace)
}

fn trace_target(cfg: &ExperimentConfig, tag: Option<usize>, k: u64) -> Result<Option<PathBuf>, HarnessError> {
    match (&cfg.out, cfg.emit_trace) {
        (Some(dir), true) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(dir.clone(), e))?;
            Ok(Some(trace_path(dir, tag, k)))
        }
        _ => Ok(None),
    }
}

/// Runs `f` over `items`, in parallel when the feature is on. Output order
/// always follows input order.
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn run_jobs(
    jobs: &[(usize, u64)],
    points: &[(ExperimentConfig, JamSchedule)],
    tagged: bool,
    parallel: bool,
) -> Result<Vec<TrialSummary>, HarnessError> {
    let job = |&(p, k): &(usize, u64)| {
        let (cfg, schedule) = &points[p];
        let trace = trace_target(cfg, tagged.then_some(p), k)?;
        run_one(cfg, schedule, k, trace)
    };
    let results = if parallel {
        map_ordered(jobs, job)
    } else {
        jobs.iter().map(job).collect()
    };
    results.into_iter().collect()
}

/// All trials of one config, in trial order.
pub fn run_trials(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<TrialSummary>, HarnessError> {
    let schedule = cfg.validate()?;
    let jobs: Vec<_> = (0..cfg.trials).map(|k| (0, k)).collect();
    run_jobs(&jobs, &[(cfg.clone(), schedule)], false, parallel)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: String,
    pub x: f64,
    pub config: ExperimentConfig,
    pub summaries: Vec<TrialSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    /// Budget sweeps only.
    pub report: Option<CompetitivenessReport>,
}

impl SweepResult {
    pub fn summaries(&self) -> impl Iterator<Item = &TrialSummary> {
        self.points.iter().flat_map(|p| p.summaries.iter())
    }
}

/// Runs `base.trials` trials at every value of `axis`. Every point is
/// validated before any trial starts.
pub fn sweep(
    base: &ExperimentConfig,
    axis: Axis,
    values: &[String],
    parallel: bool,
) -> Result<SweepResult, HarnessError> {
    let points = sweep_points(base, axis, values)?;
    let jobs: Vec<_> = points
        .iter()
        .enumerate()
        .flat_map(|(p, (cfg, _))| (0..cfg.trials).map(move |k| (p, k)))
        .collect();
    let mut all = run_jobs(&jobs, &points, true, parallel)?.into_iter();
    let points: Vec<SweepPoint> = points
        .into_iter()
        .zip(values)
        .map(|((cfg, _), v)| SweepPoint {
            value: v.clone(),
            x: axis.x(&cfg),
            summaries: all.by_ref().take(cfg.trials as usize).collect(),
            config: cfg,
        })
        .collect();
    let report = match axis {
        Axis::Budget => {
            let flat: Vec<TrialSummary> = points.iter().flat_map(|p| p.summaries.clone()).collect();
            Some(competitiveness_report(&flat)?)
        }
        _ => None,
    };
    Ok(SweepResult { axis, points, report })
}
