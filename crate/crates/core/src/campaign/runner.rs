use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::report::{aggregate_records, markdown, results_csv, ReportFormat};
use super::seed::derive_seed;
use super::trial::{run_trial, TrialOptions, TrialRecord};
use super::ConfigInfo;
use crate::scenario::ResolvedConfig;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct CampaignPlan {
    pub configs: Vec<ResolvedConfig>,
    pub trials_per_config: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub options: TrialOptions,
    /// Worker count; `None` lets the pool decide.
    pub threads: Option<usize>,
    /// Stops after this many new trials, leaving the campaign resumable.
    pub max_new_trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub trials_per_config: u64,
    pub configs: Vec<ManifestConfig>,
    pub total: u64,
    pub complete: bool,
    /// `(config_id, trial_index)` pairs whose records are on disk.
    pub completed: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub config_id: usize,
    pub scenario: String,
    pub binding: String,
    pub hash: String,
}

impl Manifest {
    fn same_campaign(&self, other: &Manifest) -> bool {
        self.master_seed == other.master_seed
            && self.trials_per_config == other.trials_per_config
            && self.configs == other.configs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub records: Vec<TrialRecord>,
    pub complete: bool,
    pub resumed: usize,
    pub executed: usize,
}

#[derive(Serialize, Deserialize)]
struct PartialLine {
    record: TrialRecord,
    wall_ms: f64,
}

const PARTIAL: &str = "records.partial.jsonl";

fn write_file(path: &Path, contents: &str) -> Result<(), CampaignError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn read_partial(path: &Path) -> Result<Vec<PartialLine>, CampaignError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CampaignError::Io { path: path.to_path_buf(), source: e }),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        // a torn final line from an interrupted run is discarded
        if let Ok(p) = serde_json::from_str::<PartialLine>(&line) {
            out.push(p);
        }
    }
    Ok(out)
}

fn manifest_for(plan: &CampaignPlan, infos: &[ConfigInfo], completed: &BTreeSet<(usize, u64)>) -> Manifest {
    let total = infos.len() as u64 * plan.trials_per_config;
    Manifest {
        master_seed: plan.master_seed,
        trials_per_config: plan.trials_per_config,
        configs: infos
            .iter()
            .map(|i| ManifestConfig {
                config_id: i.config_id,
                scenario: i.scenario.clone(),
                binding: i.binding.clone(),
                hash: format!("{:016x}", i.hash),
            })
            .collect(),
        total,
        complete: completed.len() as u64 == total,
        completed: completed.iter().copied().collect(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CampaignError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, &text)
}

/// Executes every (config, trial) pair not already recorded in `out_dir`.
/// Records are appended as they finish; final files are sorted and written
/// once every pair is present.
pub fn run_campaign(plan: &CampaignPlan) -> Result<CampaignSummary, CampaignError> {
    if plan.configs.is_empty() {
        return Err(CampaignError::Invalid("campaign has no configurations".into()));
    }
    if plan.trials_per_config == 0 {
        return Err(CampaignError::Invalid("trials per configuration must be at least 1".into()));
    }
    let dir = &plan.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let infos: Vec<ConfigInfo> = plan.configs.iter().enumerate().map(|(i, c)| ConfigInfo::new(i, c)).collect();

    let manifest_path = dir.join("manifest.json");
    let partial_path = dir.join(PARTIAL);
    let mut existing = Vec::new();
    if let Ok(text) = fs::read_to_string(&manifest_path) {
        let old: Manifest = serde_json::from_str(&text)
            .map_err(|e| CampaignError::Invalid(format!("{}: {e}", manifest_path.display())))?;
        if !old.same_campaign(&manifest_for(plan, &infos, &BTreeSet::new())) {
            return Err(CampaignError::Invalid(format!(
                "{} holds a different campaign; choose another output directory",
                dir.display()
            )));
        }
        existing = read_partial(&partial_path)?;
    }
    existing.retain(|p| p.record.config_id < infos.len() && p.record.trial_index < plan.trials_per_config);
    let mut seen = BTreeSet::new();
    existing.retain(|p| seen.insert((p.record.config_id, p.record.trial_index)));

    // rewrite so a torn line never sits between valid ones
    let mut text = String::new();
    for p in &existing {
        text.push_str(&serde_json::to_string(p).expect("serializable"));
        text.push('\n');
    }
    write_file(&partial_path, &text)?;
    write_json(&dir.join("configs.json"), &infos)?;
    write_json(&manifest_path, &manifest_for(plan, &infos, &seen))?;

    let mut todo: Vec<(usize, u64)> = (0..infos.len())
        .flat_map(|c| (0..plan.trials_per_config).map(move |t| (c, t)))
        .filter(|k| !seen.contains(k))
        .collect();
    if let Some(n) = plan.max_new_trials {
        todo.truncate(n);
    }
    if plan.options.trace {
        fs::create_dir_all(dir.join("traces")).map_err(io_err(dir))?;
    }

    let file = OpenOptions::new().append(true).open(&partial_path).map_err(io_err(&partial_path))?;
    let sink = Mutex::new((file, None::<CampaignError>, Vec::<PartialLine>::new()));
    let work = |&(c, t): &(usize, u64)| {
        if sink.lock().unwrap().1.is_some() {
            return;
        }
        let start = Instant::now();
        let seed = derive_seed(plan.master_seed, infos[c].hash, t);
        let run = run_trial(&plan.configs[c], c, t, seed, &plan.options);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let trace_err = if plan.options.trace { write_trace(dir, &plan.configs[c], &run).err() } else { None };
        let line = PartialLine { record: run.record, wall_ms };
        let mut text = serde_json::to_string(&line).expect("serializable");
        text.push('\n');
        let mut guard = sink.lock().unwrap();
        let res = guard.0.write_all(text.as_bytes()).and_then(|_| guard.0.flush());
        match (res, trace_err) {
            (Err(e), _) => guard.1 = Some(CampaignError::Io { path: partial_path.clone(), source: e }),
            (Ok(()), Some(e)) => {
                guard.2.push(line);
                guard.1 = Some(e);
            }
            (Ok(()), None) => guard.2.push(line),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads.unwrap_or(0))
        .build()
        .map_err(|e| CampaignError::Invalid(e.to_string()))?;
    pool.install(|| todo.par_iter().for_each(work));
    let (_, failure, fresh) = sink.into_inner().unwrap();

    let executed = fresh.len();
    let resumed = existing.len();
    let mut all = existing;
    all.extend(fresh);
    all.sort_by_key(|p| (p.record.config_id, p.record.trial_index));
    let done: BTreeSet<(usize, u64)> = all.iter().map(|p| (p.record.config_id, p.record.trial_index)).collect();
    let manifest = manifest_for(plan, &infos, &done);
    write_json(&manifest_path, &manifest)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let records: Vec<TrialRecord> = all.iter().map(|p| p.record.clone()).collect();
    if manifest.complete {
        let mut timing = String::from("config_id,trial_index,wall_ms\n");
        for p in &all {
            timing.push_str(&format!("{},{},{:.3}\n", p.record.config_id, p.record.trial_index, p.wall_ms));
        }
        write_file(&dir.join("timing.csv"), &timing)?;
        write_outputs(dir, &infos, &records)?;
    }
    Ok(CampaignSummary { records, complete: manifest.complete, resumed, executed })
}

fn write_trace(dir: &Path, config: &ResolvedConfig, run: &super::TrialRun) -> Result<(), CampaignError> {
    let r = &run.record;
    let base = dir.join("traces").join(format!("c{:03}_t{:04}", r.config_id, r.trial_index));
    let names: Vec<String> = config.scenario.agents.iter().map(|a| a.name.clone()).collect();
    write_file(&base.with_extension("trace.csv"), &run.trace_csv(&names))?;
    write_file(&base.with_extension("latency.csv"), &run.latency_csv())?;
    write_json(&base.with_extension("faults.json"), &r.fault_log)?;
    write_json(&base.with_extension("events.json"), &run.events)
}

fn records_jsonl(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}

fn write_outputs(dir: &Path, infos: &[ConfigInfo], records: &[TrialRecord]) -> Result<(), CampaignError> {
    write_file(&dir.join("records.jsonl"), &records_jsonl(records))?;
    for format in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown] {
        let (name, text) = render_report(infos, records, format);
        write_file(&dir.join(name), &text)?;
    }
    Ok(())
}

/// File name and contents of one report format.
pub fn render_report(infos: &[ConfigInfo], records: &[TrialRecord], format: ReportFormat) -> (&'static str, String) {
    match format {
        ReportFormat::Csv => ("results.csv", results_csv(infos, records)),
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(&aggregate_records(infos, records)).expect("serializable");
            text.push('\n');
            ("aggregate.json", text)
        }
        ReportFormat::Markdown => ("report.md", markdown(&aggregate_records(infos, records))),
    }
}

/// Reads the config table and sorted records of a finished campaign.
pub fn load_records(dir: &Path) -> Result<(Vec<ConfigInfo>, Vec<TrialRecord>), CampaignError> {
    let cpath = dir.join("configs.json");
    let text = fs::read_to_string(&cpath).map_err(io_err(&cpath))?;
    let infos: Vec<ConfigInfo> =
        serde_json::from_str(&text).map_err(|e| CampaignError::Invalid(format!("{}: {e}", cpath.display())))?;
    let rpath = dir.join("records.jsonl");
    let records = match fs::read_to_string(&rpath) {
        Ok(text) => text
            .lines()
            .map(|l| serde_json::from_str(l).map_err(|e| CampaignError::Invalid(format!("{}: {e}", rpath.display()))))
            .collect::<Result<Vec<TrialRecord>, _>>()?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            let mut rs: Vec<TrialRecord> = read_partial(&dir.join(PARTIAL))?.into_iter().map(|p| p.record).collect();
            rs.sort_by_key(|r| (r.config_id, r.trial_index));
            rs
        }
        Err(e) => return Err(CampaignError::Io { path: rpath, source: e }),
    };
    if records.is_empty() {
        return Err(CampaignError::Invalid(format!("{} holds no trial records", dir.display())));
    }
    Ok((infos, records))
}
