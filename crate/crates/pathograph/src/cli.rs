//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use pathograph_core::config::Profile;
use pathograph_core::distill::DistillMode;
use pathograph_core::pathofilter::SelectionScope;
use pathograph_core::synth::generate;
use serde_json::json;

use crate::config::{load_run_config, load_synth_spec, parse_parameter, parse_values};
use crate::error::{AppError, AppResult};
use crate::ingest::{load_cohort, read_text, write_cohort};
use crate::reports::render_metrics;
use crate::runner::{run_folds, run_sweep, thread_pool, write_json, write_run, write_sweep, WallClock};

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "PATHOGRAPH_JOBS";

#[derive(Debug, Parser)]
#[command(name = "pathograph", version, about = "Prune brain correlation graphs to disease-relevant subgraphs, distill node features and classify with a compact GCN")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Adni,
    Ppmi,
    Abide,
    Adhd200,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Adni => Profile::Adni,
            ProfileArg::Ppmi => Profile::Ppmi,
            ProfileArg::Abide => Profile::Abide,
            ProfileArg::Adhd200 => Profile::Adhd200,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ScopeArg {
    TrainOnly,
    FullCohort,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Inductive,
    Transductive,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Cohort manifest (manifest.json).
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON run configuration; omitted keys take profile or built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hyperparameter profile applied beneath the config file.
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Where patho-scores are computed.
    #[arg(long, value_enum)]
    pub scope: Option<ScopeArg>,
    /// Whether distillation statistics and masks see evaluation subjects.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Worker threads for folds.
    #[arg(long, env = JOBS_ENV)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with a planted ground truth.
    Synth {
        /// Synthetic spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full cross-validated pipeline and write its reports.
    Run(RunArgs),
    /// Run the pipeline once per value of one hyperparameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// k, rho, communities or layers_neurons.
        #[arg(long)]
        param: String,
        /// `1,2,3`, `0.1:0.6:0.1` or, for layers_neurons, `2x32,4x128`.
        #[arg(long)]
        values: String,
    },
    /// Pretty-print a metrics.json file (or the one inside a run directory).
    Report { path: PathBuf },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn prepare(args: &RunArgs) -> AppResult<(pathograph_core::config::RunConfig, crate::ingest::LoadedCohort, rayon::ThreadPool)> {
    let mut config = load_run_config(args.config.as_deref(), args.profile.map(Profile::from))?;
    if let Some(s) = args.scope {
        config.selection_scope = match s {
            ScopeArg::TrainOnly => SelectionScope::TrainOnly,
            ScopeArg::FullCohort => SelectionScope::FullCohort,
        };
    }
    if let Some(m) = args.mode {
        config.mode = match m {
            ModeArg::Inductive => DistillMode::Inductive,
            ModeArg::Transductive => DistillMode::Transductive,
        };
    }
    let pool = thread_pool(args.jobs.unwrap_or_else(default_jobs))?;
    let loaded = load_cohort(&args.manifest)?;
    for w in &loaded.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok((config, loaded, pool))
}

fn cmd_synth(spec: &Path, out: &Path) -> AppResult<()> {
    let spec = load_synth_spec(spec)?;
    let s = generate(&spec)?;
    write_cohort(out, &s.cohort, Some(&s.partition))?;
    let truth = json!({
        "planted": s.truth.planted,
        "planted_names": s.truth.planted_names,
        "signal_strength": s.truth.signal_strength,
        "seed": s.truth.seed,
        "group_directions": s.truth.group_directions,
        "clip_rate": s.truth.clip_rate,
        "spec": spec,
    });
    write_json(&out.join("ground_truth.json"), &truth)
}

fn cmd_run(args: &RunArgs) -> AppResult<()> {
    let (config, loaded, pool) = prepare(args)?;
    let result = run_folds(&loaded.cohort, loaded.partition.as_ref(), &config, &pool, &WallClock::new())?;
    write_run(&args.out, &config, &loaded.cohort, &result, &loaded.report.warnings)?;
    let r = &result.report;
    println!("{}: ACC {:.4} ± {:.4}  AUC {:.4}  F1 {:.4}", r.variant, r.acc_mean, r.acc_std, r.auc_mean, r.f1_mean);
    Ok(())
}

fn cmd_sweep(args: &RunArgs, param: &str, values: &str) -> AppResult<()> {
    let parameter = parse_parameter(param)?;
    let values = parse_values(parameter, values)?;
    let (config, loaded, pool) = prepare(args)?;
    let rows = run_sweep(&loaded.cohort, loaded.partition.as_ref(), parameter, &values, &config, &pool, &WallClock::new())?;
    write_sweep(&args.out, parameter, &rows)?;
    for row in &rows {
        println!("{}={}: ACC {:.4} ± {:.4}", parameter.name(), row.parameter_value, row.report.acc_mean, row.report.acc_std);
    }
    Ok(())
}

fn cmd_report(path: &Path) -> AppResult<()> {
    let file = if path.is_dir() { path.join("metrics.json") } else { path.to_path_buf() };
    let value: serde_json::Value =
        serde_json::from_str(&read_text(&file)?).map_err(|e| AppError::Data(format!("{}: {e}", file.display())))?;
    print!("{}", render_metrics(&value).map_err(|e| AppError::Data(format!("{}: {e}", file.display())))?);
    Ok(())
}

pub fn execute(cli: &Cli) -> AppResult<()> {
    match &cli.command {
        Command::Synth { spec, out } => cmd_synth(spec, out),
        Command::Run(args) => cmd_run(args),
        Command::Sweep { run, param, values } => cmd_sweep(run, param, values),
        Command::Report { path } => cmd_report(path),
    }
}
