//! Parallel execution of pipeline folds and sweep points, and the run
//! directory writer.

use std::path::Path;
use std::time::Instant;

use pathograph_core::config::RunConfig;
use pathograph_core::eval::{assemble, sweep_configs, FoldOutcome, MetricsReport, Pipeline, SweepParameter, SweepRow, SweepValue};
use pathograph_core::{Clock, Cohort, Partition};
use rayon::prelude::*;

use crate::checkpoint;
use crate::error::{AppError, AppResult};
use crate::ingest::write_text;
use crate::reports;

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

pub fn thread_pool(jobs: usize) -> AppResult<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(AppError::Config("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::Config(format!("cannot start {jobs} worker threads: {e}")))
}

pub struct RunResult {
    pub report: MetricsReport,
    pub outcomes: Vec<FoldOutcome>,
}

/// Runs every fold on `pool`; results come back in fold order.
pub fn run_folds(
    cohort: &Cohort,
    partition: Option<&Partition>,
    config: &RunConfig,
    pool: &rayon::ThreadPool,
    clock: &dyn Clock,
) -> AppResult<RunResult> {
    let pipeline = Pipeline::prepare(cohort, partition, config)?;
    let outcomes = pool.install(|| {
        (0..pipeline.fold_count()).into_par_iter().map(|f| pipeline.run_fold(f, clock)).collect::<Result<Vec<_>, _>>()
    })?;
    let report = assemble(&config.variant(), outcomes.iter().map(|o| o.result.clone()).collect())?;
    Ok(RunResult { report, outcomes })
}

pub fn run_sweep(
    cohort: &Cohort,
    partition: Option<&Partition>,
    parameter: SweepParameter,
    values: &[SweepValue],
    base: &RunConfig,
    pool: &rayon::ThreadPool,
    clock: &dyn Clock,
) -> AppResult<Vec<SweepRow>> {
    let configs = sweep_configs(partition, parameter, values, base).map_err(|e| AppError::Config(e.to_string()))?;
    configs
        .iter()
        .zip(values)
        .map(|(cfg, v)| {
            let r = run_folds(cohort, partition, cfg, pool, clock)?;
            Ok(SweepRow { parameter_value: v.to_string(), report: r.report })
        })
        .collect()
}

pub(crate) fn write_json(path: &Path, value: &serde_json::Value) -> AppResult<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("plain json") + "\n"))
}

/// `pathoscores.json`, `distill_report.json`, `metrics.json` and one
/// checkpoint per fold under `checkpoints/`.
pub fn write_run(out: &Path, config: &RunConfig, cohort: &Cohort, result: &RunResult, warnings: &[String]) -> AppResult<()> {
    let mut all_warnings = warnings.to_vec();
    for f in &result.report.folds {
        all_warnings.extend(f.warnings.iter().map(|w| format!("fold {}: {w}", f.fold)));
    }
    write_json(&out.join("pathoscores.json"), &reports::pathoscores_json(config, &result.outcomes))?;
    write_json(&out.join("distill_report.json"), &reports::distill_json(config, &result.outcomes))?;
    write_json(
        &out.join("metrics.json"),
        &reports::metrics_json(config, &result.report, cohort.node_count(), &all_warnings),
    )?;
    for o in &result.outcomes {
        checkpoint::save(&out.join(format!("checkpoints/fold-{}.ckpt", o.result.fold)), &o.model)?;
    }
    Ok(())
}

pub fn write_sweep(out: &Path, parameter: SweepParameter, rows: &[SweepRow]) -> AppResult<()> {
    write_text(&out.join("sweep.csv"), &reports::sweep_csv(rows))?;
    write_json(&out.join("sweep.json"), &reports::sweep_json(parameter, rows))
}
