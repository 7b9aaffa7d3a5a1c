//! Command-line experiment runner and mapping reports.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use schedsim_core::mapping::{self, Partition};
use schedsim_core::metrics::{self, MetricsReport, Summary};
use schedsim_core::topology::parse_setup;
use schedsim_core::workload::{parse_trace_with, validate_workload, ColumnMap, Violation};
use schedsim_core::{simulate, SchedulerConfig, Topology, WorkloadTrace};

#[derive(Debug, Parser)]
#[command(
    name = "schedsim",
    version,
    about = "Simulate datacenter scheduler variants on a workflow trace",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a scheduler mapping report as CSV.
    Mapping(MappingArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Recorded repetitions per scheduler.
    #[arg(short, long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeat: u32,
    /// Discarded warm-up runs per scheduler.
    #[arg(short, long, default_value_t = 4)]
    pub warm_up: u32,
    /// Simulations run concurrently.
    #[arg(short, long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub parallelism: u32,
    /// Scheduler names such as FIFO-BESTFIT, run in the given order (default: all nine).
    #[arg(long, num_args = 1..)]
    pub schedulers: Vec<String>,
    /// Cluster setup JSON.
    #[arg(short, required = true)]
    pub setup: Option<PathBuf>,
    /// Workflow trace.
    #[arg(required = true)]
    pub trace: Option<PathBuf>,
    /// Base seed; repetition i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace column indices for task,submit,runtime,cores,job,parents.
    #[arg(long)]
    pub columns: Option<ColumnMap>,
    /// Output directory for the CSV files.
    #[arg(long = "out", default_value = "data")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MappingArgs {
    pub report: Report,
    /// Rows in the difference reports.
    #[arg(short, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Mapping CSV (default: the bundled survey data).
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    Groups,
    OriginDiff,
    EraDiff,
}

/// Parses scheduler names, accepting space-separated names inside one
/// argument too. Empty means all nine.
pub fn parse_schedulers(names: &[String]) -> Result<Vec<SchedulerConfig>> {
    let mut configs: Vec<SchedulerConfig> = Vec::new();
    for name in names.iter().flat_map(|n| n.split_whitespace()) {
        let config: SchedulerConfig = name
            .parse()
            .with_context(|| format!("bad scheduler name {name:?}"))?;
        ensure!(!configs.contains(&config), "scheduler {name} listed twice");
        configs.push(config);
    }
    if configs.is_empty() {
        configs = SchedulerConfig::all();
    }
    Ok(configs)
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))
}

/// Loads and checks the setup and trace. Non-blocking violations are
/// returned as warnings.
pub fn load_inputs(args: &RunArgs) -> Result<(Topology, WorkloadTrace, Vec<Violation>)> {
    let setup_path = args.setup.as_deref().context("missing -s setup file")?;
    let trace_path = args.trace.as_deref().context("missing trace file")?;
    let topology = parse_setup(&read(setup_path, "setup file")?)
        .with_context(|| format!("in {}", setup_path.display()))?;
    let trace = parse_trace_with(
        &trace_path.display().to_string(),
        &read(trace_path, "trace")?,
        &args.columns.unwrap_or_default(),
    )
    .with_context(|| format!("in {}", trace_path.display()))?;
    let (blocking, warnings): (Vec<_>, Vec<_>) = validate_workload(&trace, &topology)
        .into_iter()
        .partition(Violation::is_blocking);
    if !blocking.is_empty() {
        let list: Vec<String> = blocking.iter().map(|v| v.to_string()).collect();
        bail!(
            "{} cannot be simulated: {}",
            trace_path.display(),
            list.join("; ")
        );
    }
    Ok((topology, trace, warnings))
}

/// CSV text of one recorded repetition.
struct RunOutput {
    report: MetricsReport,
    stages: String,
}

fn run_one(
    trace: &WorkloadTrace,
    topology: &Topology,
    config: SchedulerConfig,
    seed: u64,
    repetition: u32,
    warm_up: bool,
) -> Result<Option<RunOutput>> {
    let label = if warm_up { "warm-up" } else { "repetition" };
    let result = simulate(trace, topology, config, seed)
        .with_context(|| format!("{config} {label} {repetition}"))?;
    if warm_up {
        return Ok(None);
    }
    let report = metrics::compute_metrics(&result, trace, repetition)
        .with_context(|| format!("{config} {label} {repetition}"))?;
    let stages = metrics::stage_csv_rows(&result.timings, &report.config, repetition);
    Ok(Some(RunOutput { report, stages }))
}

/// What [`run_experiments`] wrote.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub summaries: Vec<Summary>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub const OUTPUT_FILES: [&str; 4] = ["tasks.csv", "jobs.csv", "stages.csv", "summary.csv"];

/// Runs every configuration's warm-ups and repetitions and writes
/// `tasks.csv`, `jobs.csv`, `stages.csv` and `summary.csv` to the output
/// directory. Inputs are fully validated before anything is written, and
/// the files only appear once every simulation has succeeded.
pub fn run_experiments(args: &RunArgs) -> Result<RunSummary> {
    let configs = parse_schedulers(&args.schedulers)?;
    let (topology, trace, warnings) = load_inputs(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallelism as usize)
        .build()
        .context("cannot start worker threads")?;

    let mut tasks = String::from(metrics::TASK_CSV_HEADER) + "\n";
    let mut jobs = String::from(metrics::JOB_CSV_HEADER) + "\n";
    let mut stages = String::from(metrics::STAGE_CSV_HEADER) + "\n";
    let mut summaries = Vec::with_capacity(configs.len());

    for &config in &configs {
        let runs: Vec<(u32, bool)> = (0..args.warm_up)
            .map(|w| (w, true))
            .chain((0..args.repeat).map(|r| (r, false)))
            .collect();
        let outputs = pool.install(|| {
            runs.par_iter()
                .map(|&(rep, warm)| {
                    let seed = args.seed.wrapping_add(rep as u64);
                    run_one(&trace, &topology, config, seed, rep, warm)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let recorded: Vec<RunOutput> = outputs.into_iter().flatten().collect();
        for run in &recorded {
            tasks += &metrics::task_csv_rows(&run.report);
            jobs += &metrics::job_csv_rows(&run.report);
            stages += &run.stages;
        }
        let reports: Vec<MetricsReport> = recorded.into_iter().map(|r| r.report).collect();
        summaries.push(metrics::summarize(&reports)?);
    }

    let out = &args.output_dir;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let contents = [tasks, jobs, stages, metrics::emit_summary_csv(&summaries)];
    let mut files = Vec::new();
    for (name, text) in OUTPUT_FILES.iter().zip(contents) {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        files.push(path);
    }
    Ok(RunSummary {
        summaries,
        files,
        warnings: warnings.iter().map(|w| w.to_string()).collect(),
    })
}

/// Renders a mapping report as CSV.
pub fn run_mapping_report(path: Option<&Path>, report: Report, k: usize) -> Result<String> {
    let matrix = match path {
        Some(p) => mapping::parse_mapping(&read(p, "mapping file")?)
            .with_context(|| format!("in {}", p.display()))?,
        None => mapping::bundled(),
    };
    Ok(match report {
        Report::Groups => mapping::groups_report(&matrix),
        Report::OriginDiff => mapping::diff_report(&matrix, Partition::Origin, k)?,
        Report::EraDiff => mapping::diff_report(&matrix, Partition::Era, k)?,
    })
}
