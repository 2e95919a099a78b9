use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use addt::campaign::{
    aggregate_records, load_records, markdown, render_report, run_campaign, CampaignError, CampaignPlan, ReportFormat,
    TrialOptions, DEFAULT_TRIALS,
};
use addt::fault::FaultSpec;
use addt::latency::{CouplingMode, LatencyModel};
use addt::pipeline::manifest;
use addt::scenario::{check_scenario, expand_sweeps, Diagnostic, ResolvedConfig};

#[derive(Parser)]
#[command(name = "addt", version, about = "Closed-loop driving simulator with fault injection campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one scenario without sweep axes.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Expand the sweep axes of each file and run every configuration.
    Sweep {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Print a report of a finished campaign directory.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Parse and validate scenario files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// List the fault-addressable state registers.
    Manifest,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "addt-out")]
    out: PathBuf,
    /// Write per-trial traces, latency samples and fault logs.
    #[arg(long)]
    trace: bool,
    /// JSON list of compute faults replacing those declared in the scenario.
    #[arg(long)]
    faults: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "record")]
    latency_coupling: CouplingMode,
    #[arg(long, env = "ADDT_THREADS")]
    threads: Option<usize>,
    /// Stop after this many new trials; rerun to resume.
    #[arg(long, hide = true)]
    max_trials: Option<usize>,
}

enum Failure {
    Diagnostics,
    Io(String),
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Io { .. } => Failure::Io(e.to_string()),
            CampaignError::Invalid(m) => {
                eprintln!("error: {m}");
                Failure::Diagnostics
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn print_diags(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", path.display());
    }
}

fn load(path: &Path) -> Result<addt::scenario::ScenarioSpec, Failure> {
    let text = read(path)?;
    let (spec, diags) = check_scenario(&text);
    print_diags(path, &diags);
    match spec {
        Some(s) if !diags.iter().any(Diagnostic::is_error) => Ok(s),
        _ => Err(Failure::Diagnostics),
    }
}

fn options(args: &RunArgs) -> Result<TrialOptions, Failure> {
    let fault_override = match &args.faults {
        Some(p) => {
            let faults: Vec<FaultSpec> = serde_json::from_str(&read(p)?).map_err(|e| {
                eprintln!("{}: {e}", p.display());
                Failure::Diagnostics
            })?;
            Some(faults)
        }
        None => None,
    };
    Ok(TrialOptions {
        latency: LatencyModel { coupling: args.latency_coupling, ..LatencyModel::default() },
        fault_override,
        trace: args.trace,
        ..TrialOptions::default()
    })
}

fn campaign(configs: Vec<ResolvedConfig>, args: &RunArgs) -> Result<(), Failure> {
    let plan = CampaignPlan {
        configs,
        trials_per_config: args.trials,
        master_seed: args.seed,
        out_dir: args.out.clone(),
        options: options(args)?,
        threads: args.threads,
        max_new_trials: args.max_trials,
    };
    let summary = run_campaign(&plan)?;
    if summary.complete {
        let (infos, _) = load_records(&args.out)?;
        print!("{}", markdown(&aggregate_records(&infos, &summary.records)));
        eprintln!("wrote {}", args.out.display());
    } else {
        eprintln!(
            "stopped after {} new trials ({} on disk); rerun the same command to resume",
            summary.executed,
            summary.records.len()
        );
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { file, opts } => {
            let spec = load(&file)?;
            if !spec.sweeps.is_empty() {
                eprintln!("{}: declares sweep axes; use `addt sweep`", file.display());
                return Err(Failure::Diagnostics);
            }
            campaign(expand_sweeps(&spec), &opts)
        }
        Command::Sweep { files, opts } => {
            let mut configs = Vec::new();
            for f in &files {
                configs.extend(expand_sweeps(&load(f)?));
            }
            if configs.is_empty() {
                eprintln!("sweep expands to no configurations");
                return Err(Failure::Diagnostics);
            }
            campaign(configs, &opts)
        }
        Command::Report { dir, format } => {
            let (infos, records) = load_records(&dir)?;
            print!("{}", render_report(&infos, &records, format).1);
            Ok(())
        }
        Command::Check { files } => {
            let mut failed = false;
            for f in &files {
                match load(f) {
                    Ok(spec) => println!("{}: ok, {} configuration(s)", f.display(), expand_sweeps(&spec).len()),
                    Err(Failure::Diagnostics) => failed = true,
                    Err(e) => return Err(e),
                }
            }
            if failed {
                Err(Failure::Diagnostics)
            } else {
                Ok(())
            }
        }
        Command::Manifest => {
            println!("node,index,name,hardware");
            for e in manifest() {
                println!("{},{},{},{:?}", e.node, e.index, e.name, e.hardware);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics) => ExitCode::from(1),
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
