//! Command-line front end: validate, run, compare, export-matrix, report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{
    attach_length_feature, compare_runs, comparable_row_filter, design_matrix, instances_from_trace, render_tables,
    AnalyticsError, SdConvention,
};
use crate::contract::{load_bundle, validate_bundle_set, EvaluationContract};
use crate::gateway::{HttpBackend, JudgeGateway, JuryPool, RetryPolicy, ScriptFile, ScriptedBackend};
use crate::grading::VotePattern;
use crate::runner::{load_submissions, run_grading, PoolRunner, RunError, RunSettings};
use crate::trace::{audit_trace, list_runs, read_trace, write_trace, RunTrace};

#[derive(Debug, Parser)]
#[command(name = "evalcontract", version, about = "Grade submissions against weighted evaluation contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every contract in a bundle file or directory.
    Validate {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Grade submissions under one or two jury pools and write a trace.
    Run(RunArgs),
    /// Compare two pools across one or more stored runs.
    Compare {
        #[command(flatten)]
        select: TraceSelection,
        #[command(flatten)]
        pools: PoolPair,
        /// Write the machine-readable comparison document here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the document as JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Write the filtered long-format design matrix as CSV.
    ExportMatrix {
        #[command(flatten)]
        select: TraceSelection,
        #[command(flatten)]
        pools: PoolPair,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SdArg::Sample)]
        sd: SdArg,
    },
    /// Per-task scores and an integrity audit of stored runs.
    Report {
        #[command(flatten)]
        select: TraceSelection,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Directory of `<task_id>.txt` submission files.
    #[arg(long)]
    pub submissions: PathBuf,
    /// Pool config; give twice for a two-pool run. The first grades officially.
    #[arg(long = "pool", required = true, num_args = 1)]
    pub pools: Vec<PathBuf>,
    /// Trace output root.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub concurrency: usize,
    /// Scripted judge responses; replaces HTTP calls.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub run_id: String,
    #[arg(long, default_value = "solver")]
    pub solver: String,
}

#[derive(Debug, Args)]
pub struct TraceSelection {
    /// Trace root directory.
    #[arg(long)]
    pub traces: PathBuf,
    /// Run id to include; repeatable. Defaults to every run under the root.
    #[arg(long = "run")]
    pub runs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PoolPair {
    #[arg(long, default_value = "frontier")]
    pub pool_a: String,
    #[arg(long, default_value = "compact")]
    pub pool_b: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SdArg {
    Sample,
    Population,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid contracts, failed audits, comparisons that cannot be made.
    #[error("{0}")]
    Failure(String),
    /// Unreadable paths and configuration faults.
    #[error("{0}")]
    Fault(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Fault(_) => 2,
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Trace(t) => CliError::Fault(t.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

fn io_fault(e: std::io::Error) -> CliError {
    CliError::Fault(e.to_string())
}

/// Parse arguments and run, mapping the outcome to the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { bundle } => cmd_validate(&bundle, out),
        Command::Run(args) => cmd_run(&args, out).map(|_| ()),
        Command::Compare { select, pools, out: path, json } => {
            let traces = load_traces(&select)?;
            let doc = compare_runs(&traces, &pools.pool_a, &pools.pool_b)?;
            let body = serde_json::to_string_pretty(&doc).expect("serializable document");
            if let Some(path) = path {
                write_file(&path, &body)?;
            }
            if json {
                writeln!(out, "{body}").map_err(io_fault)
            } else {
                write!(out, "{}", render_tables(&doc)).map_err(io_fault)
            }
        }
        Command::ExportMatrix { select, pools, out: path, sd } => {
            let traces = load_traces(&select)?;
            let instances: Vec<_> = traces.iter().flat_map(instances_from_trace).collect();
            let rows = comparable_row_filter(&instances, &pools.pool_a, &pools.pool_b);
            let convention = match sd {
                SdArg::Sample => SdConvention::Sample,
                SdArg::Population => SdConvention::Population,
            };
            let (ordinal, scaler) = attach_length_feature(&rows, convention)?;
            let dm = design_matrix(&ordinal);
            write_file(&path, &dm.to_csv())?;
            writeln!(
                out,
                "wrote {} rows x {} columns to {} (length mean {:.4}, sd {:.4}; reference run {})",
                dm.rows.len(),
                dm.columns.len(),
                path.display(),
                scaler.mean,
                scaler.sd,
                dm.reference_run.as_deref().unwrap_or("-")
            )
            .map_err(io_fault)
        }
        Command::Report { select } => cmd_report(&select, out),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_fault)?;
    }
    std::fs::write(path, body).map_err(|e| CliError::Fault(format!("{}: {e}", path.display())))
}

fn load_contracts(bundle: &Path) -> Result<Vec<(String, EvaluationContract)>, CliError> {
    let loaded = load_bundle(bundle).map_err(|e| CliError::Fault(e.to_string()))?;
    Ok(loaded.into_iter().map(|l| (l.source.display().to_string(), l.contract)).collect())
}

pub fn cmd_validate(bundle: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_contracts(bundle)?;
    let contracts: Vec<_> = loaded.iter().map(|(_, c)| c.clone()).collect();
    let reports = validate_bundle_set(&contracts);
    let mut failing = 0;
    for ((source, _), report) in loaded.iter().zip(&reports) {
        if report.is_runnable() {
            writeln!(out, "ok    {} ({source})", report.task_id).map_err(io_fault)?;
        } else {
            failing += 1;
            writeln!(out, "FAIL  {} ({source})", report.task_id).map_err(io_fault)?;
            for v in &report.violations {
                writeln!(out, "      {}: {}", v.path, v.message).map_err(io_fault)?;
            }
        }
    }
    if failing > 0 {
        return Err(CliError::Failure(format!("{failing} of {} contracts are not runnable", reports.len())));
    }
    Ok(())
}

fn pattern_counts(patterns: impl Iterator<Item = VotePattern>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in patterns {
        let label = match p {
            VotePattern::Unanimous => "5:0",
            VotePattern::OneDissenter => "4:1",
            VotePattern::Split => "3:2",
            VotePattern::Reduced => "reduced",
            VotePattern::NotApplicable => continue,
        };
        *counts.entry(label).or_default() += 1;
    }
    counts.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<RunTrace, CliError> {
    if args.pools.len() > 2 {
        return Err(CliError::Fault(format!("at most two --pool values, got {}", args.pools.len())));
    }
    let loaded = load_contracts(&args.bundle)?;
    let mut contracts: Vec<EvaluationContract> = loaded.into_iter().map(|(_, c)| c).collect();
    let reports = validate_bundle_set(&contracts);
    if let Some(bad) = reports.iter().find(|r| !r.is_runnable()) {
        let detail = bad.violations.iter().map(|v| format!("{}: {}", v.path, v.message)).collect::<Vec<_>>().join("; ");
        return Err(CliError::Failure(format!("contract `{}` is not runnable: {detail}", bad.task_id)));
    }
    contracts = contracts
        .into_iter()
        .map(|c| c.normalized())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Failure(e.to_string()))?;

    let pools: Vec<JuryPool> =
        args.pools.iter().map(|p| JuryPool::load(p)).collect::<Result<_, _>>().map_err(|e| CliError::Fault(e.to_string()))?;
    let submissions = load_submissions(&args.submissions, &contracts, &args.solver)
        .map_err(|e| CliError::Fault(e.to_string()))?;

    let gateways: Vec<JudgeGateway> = match &args.script {
        Some(path) => {
            let script = ScriptFile::load(path).map_err(CliError::Fault)?;
            let backend = Arc::new(ScriptedBackend::from_file(script));
            pools.iter().map(|_| JudgeGateway::new(Arc::clone(&backend)).with_retry(RetryPolicy::immediate())).collect()
        }
        None => pools
            .iter()
            .map(|p| HttpBackend::from_pool(p).map(JudgeGateway::new))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Fault(format!("pool configuration: {e}")))?,
    };
    let runners: Vec<PoolRunner<'_>> =
        pools.iter().zip(&gateways).map(|(pool, gateway)| PoolRunner { pool, gateway }).collect();

    let settings =
        RunSettings { run_id: args.run_id.clone(), solver_id: args.solver.clone(), concurrency: args.concurrency.max(1) };
    let trace = run_grading(&contracts, &submissions, &runners, &settings)
        .map_err(|e: RunError| CliError::Fault(e.to_string()))?;
    write_trace(&trace, &args.out).map_err(|e| CliError::Fault(e.to_string()))?;

    for task in &trace.tasks {
        if !task.is_graded() {
            let reason = if task.flags.missing_submission {
                "missing submission".to_string()
            } else if let Some(err) = &task.flags.verifier_error {
                format!("verifier error: {err}")
            } else {
                "empty results".to_string()
            };
            writeln!(out, "{:<24} excluded ({reason})", task.task_id).map_err(io_fault)?;
            continue;
        }
        for (pool_id, result) in &task.results {
            writeln!(
                out,
                "{:<24} {:<12} S={:>7.3} tau={:>6.2} {} [{}]",
                task.task_id,
                pool_id,
                result.score,
                result.pass_threshold,
                if result.passed { "PASS" } else { "FAIL" },
                pattern_counts(result.criterion_results.iter().map(|c| c.vote_pattern)),
            )
            .map_err(io_fault)?;
        }
    }
    writeln!(out, "trace written to {}", crate::trace::run_dir(&args.out, &trace.run_id).display()).map_err(io_fault)?;
    Ok(trace)
}

fn load_traces(select: &TraceSelection) -> Result<Vec<RunTrace>, CliError> {
    let ids = if select.runs.is_empty() {
        list_runs(&select.traces).map_err(|e| CliError::Fault(e.to_string()))?
    } else {
        select.runs.clone()
    };
    if ids.is_empty() {
        return Err(CliError::Fault(format!("no runs found under {}", select.traces.display())));
    }
    ids.iter().map(|id| read_trace(&select.traces, id).map_err(|e| CliError::Fault(e.to_string()))).collect()
}

fn cmd_report(select: &TraceSelection, out: &mut dyn Write) -> Result<(), CliError> {
    let traces = load_traces(select)?;
    let mut problems = 0;
    for trace in &traces {
        writeln!(out, "run {} (solver {}, grading pool {})", trace.run_id, trace.solver_id, trace.grading_pool)
            .map_err(io_fault)?;
        let graded: Vec<_> = trace.official_results().collect();
        let passed = graded.iter().filter(|r| r.passed).count();
        writeln!(out, "  tasks {}, graded {}, passed {}", trace.tasks.len(), graded.len(), passed).map_err(io_fault)?;
        for r in &graded {
            writeln!(out, "  {:<24} S={:>7.3} {}", r.task_id, r.score, if r.passed { "PASS" } else { "FAIL" })
                .map_err(io_fault)?;
        }
        let issues = audit_trace(trace);
        for issue in &issues {
            writeln!(out, "  audit: {issue}").map_err(io_fault)?;
        }
        problems += issues.len();
    }
    if problems > 0 {
        return Err(CliError::Failure(format!("{problems} audit findings")));
    }
    Ok(())
}
