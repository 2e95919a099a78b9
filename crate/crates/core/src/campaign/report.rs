use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trial::TrialRecord;
use super::ConfigInfo;
use crate::latency::nearest_rank;
use crate::metrics::{format_rate, OutcomeKind, SuccessAggregate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub cycles: u64,
    pub mean_e2e: f64,
    /// Nearest-rank p99 over the per-trial p99 values.
    pub p99_e2e: f64,
    pub violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigAggregate {
    pub config_id: usize,
    pub scenario: String,
    pub binding: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub success: SuccessAggregate,
    pub outcomes: BTreeMap<OutcomeKind, u64>,
    pub mean_e_p: Option<f64>,
    pub mean_e_theta: Option<f64>,
    pub latency: Option<LatencySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub configs: Vec<ConfigAggregate>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0u64), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-config aggregates. `records` must be sorted by (config, trial).
pub fn aggregate_records(configs: &[ConfigInfo], records: &[TrialRecord]) -> Aggregate {
    let mut out = Vec::new();
    for info in configs {
        let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.config_id == info.config_id).collect();
        if rs.is_empty() {
            continue;
        }
        let k = rs.iter().filter(|r| r.outcome.is_success()).count() as u64;
        let mut outcomes = BTreeMap::new();
        for r in &rs {
            *outcomes.entry(r.outcome.kind).or_insert(0) += 1;
        }
        let lat: Vec<_> = rs.iter().filter_map(|r| r.latency).collect();
        let latency = (!lat.is_empty()).then(|| {
            let cycles: usize = lat.iter().map(|l| l.count).sum();
            let mut p99s: Vec<f64> = lat.iter().map(|l| l.p99).collect();
            p99s.sort_by(f64::total_cmp);
            LatencySummary {
                cycles: cycles as u64,
                mean_e2e: lat.iter().map(|l| l.mean * l.count as f64).sum::<f64>() / cycles as f64,
                p99_e2e: nearest_rank(&p99s, 99),
                violation_rate: lat.iter().map(|l| l.violation_rate * l.count as f64).sum::<f64>() / cycles as f64,
            }
        });
        out.push(ConfigAggregate {
            config_id: info.config_id,
            scenario: info.scenario.clone(),
            binding: info.binding.clone(),
            config_hash: format!("{:016x}", info.hash),
            success: SuccessAggregate::from_counts(k, rs.len() as u64),
            outcomes,
            mean_e_p: mean(rs.iter().filter_map(|r| r.e_p)),
            mean_e_theta: mean(rs.iter().filter_map(|r| r.e_theta)),
            latency,
        });
    }
    Aggregate { configs: out }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "config_id,trial_index,seed,scenario,binding,outcome,time_of_event,ticks,final_progress,e_p,e_theta,e_theta_raw,lat_count,lat_best,lat_mean,lat_p99,lat_violation_rate,frames,frames_dropped,commands_clamped,faults_injected";

/// One row per trial.
pub fn results_csv(configs: &[ConfigInfo], records: &[TrialRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let info = &configs[r.config_id];
        let l = r.latency;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config_id,
            r.trial_index,
            r.seed,
            csv_field(&info.scenario),
            csv_field(&info.binding),
            r.outcome.kind.as_str(),
            r.outcome.time_of_event,
            r.ticks,
            r.final_progress,
            opt(r.e_p),
            opt(r.e_theta),
            opt(r.e_theta_raw),
            l.map_or(0, |l| l.count),
            opt(l.map(|l| l.best)),
            opt(l.map(|l| l.mean)),
            opt(l.map(|l| l.p99)),
            opt(l.map(|l| l.violation_rate)),
            r.frames,
            r.frames_dropped,
            r.commands_clamped,
            r.fault_log.len()
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Recomputes per-config success counts from `results.csv` text.
pub fn success_counts_from_csv(text: &str) -> BTreeMap<usize, (u64, u64)> {
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let Some(id) = cols.next().and_then(|c| c.parse::<usize>().ok()) else { continue };
        let outcome = split_csv(line).get(5).cloned().unwrap_or_default();
        let e = out.entry(id).or_insert((0, 0));
        e.1 += 1;
        if outcome == "success" {
            e.0 += 1;
        }
    }
    out
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Success-rate table with scenarios as rows and sweep points as columns,
/// followed by per-config details.
pub fn markdown(agg: &Aggregate) -> String {
    let mut scenarios: Vec<&str> = Vec::new();
    let mut columns: Vec<&str> = Vec::new();
    for c in &agg.configs {
        if !scenarios.contains(&c.scenario.as_str()) {
            scenarios.push(&c.scenario);
        }
        if !columns.contains(&c.binding.as_str()) {
            columns.push(&c.binding);
        }
    }
    let mut out = String::from("# Campaign report\n\n## Mission success rate\n\n| Scenario |");
    for col in &columns {
        let _ = write!(out, " {col} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for sc in &scenarios {
        let _ = write!(out, "| {sc} |");
        for col in &columns {
            let cell = agg
                .configs
                .iter()
                .find(|c| c.scenario == *sc && c.binding == *col)
                .map(|c| format_rate(c.success.rate))
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out.push_str("\n## Per configuration\n\n");
    out.push_str("| id | scenario | binding | n | success | rate | 95% CI | collision | off_lane | timeout | aborted | E_p (m) | E_θ (rad) | mean e2e (ms) | p99 e2e (ms) | deadline misses |\n");
    out.push_str("|---:|---|---|---:|---:|---:|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for c in &agg.configs {
        let count = |k| c.outcomes.get(&k).copied().unwrap_or(0);
        let f4 = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.4}"));
        let (lm, lp, lv) = match &c.latency {
            Some(l) => (format!("{:.2}", l.mean_e2e), format!("{:.2}", l.p99_e2e), format_rate(l.violation_rate)),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | [{}, {}] | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.config_id,
            c.scenario,
            c.binding,
            c.success.trials,
            c.success.successes,
            format_rate(c.success.rate),
            format_rate(c.success.ci_low),
            format_rate(c.success.ci_high),
            count(OutcomeKind::Collision),
            count(OutcomeKind::OffLane),
            count(OutcomeKind::Timeout),
            count(OutcomeKind::Aborted),
            f4(c.mean_e_p),
            f4(c.mean_e_theta),
            lm,
            lp,
            lv
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MissionOutcome;

    fn rec(config_id: usize, trial: u64, kind: OutcomeKind) -> TrialRecord {
        TrialRecord {
            config_id,
            trial_index: trial,
            seed: trial,
            outcome: MissionOutcome { kind, time_of_event: 1.0 },
            e_p: None,
            e_theta: None,
            e_theta_raw: None,
            latency: None,
            fault_log: Vec::new(),
            ticks: 100,
            frames: 10,
            frames_dropped: 0,
            commands_clamped: 0,
            final_progress: 1.0,
            error: None,
        }
    }

    fn info(id: usize, scenario: &str, binding: &str) -> ConfigInfo {
        ConfigInfo { config_id: id, scenario: scenario.into(), binding: binding.into(), hash: 0, source: String::new() }
    }

    #[test]
    fn table_cells() {
        let configs = vec![info(0, "overtaking", "drop=0.01"), info(1, "overtaking", "drop=0.1")];
        let mut records: Vec<TrialRecord> = (0..240).map(|t| rec(0, t, OutcomeKind::Success)).collect();
        records[17].outcome.kind = OutcomeKind::Collision;
        records.extend((0..240).map(|t| rec(1, t, OutcomeKind::OffLane)));
        let agg = aggregate_records(&configs, &records);
        let md = markdown(&agg);
        assert!(md.contains("| overtaking | 99.58% | 0.00% |"), "{md}");
        let csv = results_csv(&configs, &records);
        let counts = success_counts_from_csv(&csv);
        for c in &agg.configs {
            assert_eq!(counts[&c.config_id], (c.success.successes, c.success.trials));
        }
        let back: Aggregate = serde_json::from_str(&serde_json::to_string(&agg).unwrap()).unwrap();
        assert_eq!(back, agg);
    }

    #[test]
    fn quoted_fields() {
        assert_eq!(split_csv("a,\"b,c\",\"d\"\"e\""), vec!["a", "b,c", "d\"e"]);
        assert_eq!(csv_field("x;y"), "x;y");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }
}
