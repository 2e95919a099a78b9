//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use addt::campaign::{derive_seed, run_campaign, run_trial, CampaignPlan, ConfigInfo, TrialOptions, TrialRecord};
use addt::fault::flip_bit;
use addt::latency::{kl_divergence, nearest_rank, LatencyModel, DEADLINE_MS};
use addt::metrics::*;
use addt::pipeline::{perc, NodeId};
use addt::scenario::{expand_sweeps, parse_scenario, serialize, ResolvedConfig};
use addt::sensor::{sample_frame, to_ego_frame, Extrinsics, SensorConfig};
use addt::world::{Agent, BehaviorScript, EventKind, VehicleState, WorldState};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn campaign(file: &str, trials: u64, dir: &Path) -> Vec<SuccessAggregate> {
    let plan = CampaignPlan {
        configs: expand_sweeps(&common::load(file)),
        trials_per_config: trials,
        master_seed: 0,
        out_dir: dir.to_path_buf(),
        options: TrialOptions::default(),
        threads: None,
        max_new_trials: None,
    };
    let summary = run_campaign(&plan).expect("campaign runs");
    let mut out = vec![(0u64, 0u64); plan.configs.len()];
    for r in &summary.records {
        out[r.config_id].0 += r.outcome.is_success() as u64;
        out[r.config_id].1 += 1;
    }
    out.into_iter().map(|(k, n)| SuccessAggregate::from_counts(k, n)).collect()
}

fn show(a: &SuccessAggregate) -> String {
    format!("{} [{}, {}]", format_rate(a.rate), format_rate(a.ci_low), format_rate(a.ci_high))
}

fn overlap(a: &SuccessAggregate, b: &SuccessAggregate) -> bool {
    !a.strictly_below(b) && !b.strictly_below(a)
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let n = rng.random_range(1..20);
        let pairs: Vec<DetectionPair> = (0..n)
            .map(|_| {
                let mut p = || {
                    Pose2::new(
                        rng.random_range(-60.0..60.0),
                        rng.random_range(-60.0..60.0),
                        rng.random_range(-7.0..7.0),
                    )
                };
                DetectionPair { detected: p(), ground_truth: p() }
            })
            .collect();
        let mut pos = 0.0;
        let mut ang = 0.0;
        for p in &pairs {
            let (dx, dy) = (p.detected.x - p.ground_truth.x, p.detected.y - p.ground_truth.y);
            pos += (dx * dx + dy * dy).sqrt();
            let d = p.detected.theta - p.ground_truth.theta;
            ang += d.sin().atan2(d.cos()).abs();
        }
        let (pos, ang) = (pos / n as f64, ang / n as f64);
        let (e_p, e_t) = (position_error(&pairs).unwrap(), orientation_error(&pairs).unwrap());
        ensure((e_p - pos).abs() <= 1e-12, || format!("E_p {e_p} vs oracle {pos}"))?;
        ensure((e_t - ang).abs() <= 1e-12, || format!("E_theta {e_t} vs oracle {ang}"))?;
    }
    let tri = DetectionPair { detected: Pose2::new(3.0, 4.0, 0.0), ground_truth: Pose2::new(0.0, 0.0, 0.0) };
    ensure(position_error(&[tri]) == Ok(5.0), || "(3,4) case".into())?;
    let seam = DetectionPair { detected: Pose2::new(0.0, 0.0, 3.04), ground_truth: Pose2::new(0.0, 0.0, -3.04) };
    let e = orientation_error(&[seam]).unwrap();
    ensure(e == 2.0 * PI - 6.08 && (e - 0.203185).abs() < 1e-6, || format!("wrap case gave {e}"))?;
    Ok("10^4 random sets within 1e-12; 3-4-5 and seam cases exact".into())
}

fn miscalibration_law() -> Verdict {
    let cfg = SensorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (0.0f64, 0.0f64);
    for delta in [0.005, 0.01, 0.02, 0.05] {
        let actual = Extrinsics { rotation: [delta, 0.0, 0.0], ..Extrinsics::identity() };
        let mut last = 0.0;
        for r in [10.0, 20.0, 50.0] {
            let agent = Agent {
                id: 1,
                name: "o".into(),
                state: VehicleState::new(r, 0.0, 0.0, 0.0),
                script: BehaviorScript::Cruise,
                home_d: 0.0,
            };
            let world = WorldState::new(VehicleState::new(0.0, 0.0, 0.0, 0.0), vec![agent]);
            let frame = sample_frame(&world, &actual, &cfg, 0, &mut rng);
            let dets = to_ego_frame(&frame, &Extrinsics::identity()).unwrap();
            let pairs: Vec<DetectionPair> = dets
                .iter()
                .map(|d| DetectionPair { detected: Pose2::new(d.x, d.y, d.yaw), ground_truth: Pose2::new(r, 0.0, 0.0) })
                .collect();
            ensure(pairs.len() == 1, || format!("expected one detection at r={r}"))?;
            let e_p = position_error(&pairs).unwrap();
            let e_t = orientation_error(&pairs).unwrap();
            let want = 2.0 * r * (delta / 2.0).sin();
            worst = (worst.0.max((e_p - want).abs()), worst.1.max((e_t - delta).abs()));
            ensure((e_p - want).abs() <= 1e-9, || format!("delta={delta} r={r}: E_p {e_p} vs {want}"))?;
            ensure((e_t - delta).abs() <= 1e-12, || format!("delta={delta} r={r}: E_theta {e_t}"))?;
            ensure(e_p > last, || format!("E_p not increasing in r at delta={delta}"))?;
            last = e_p;
        }
    }
    Ok(format!("max |E_p err| {:.1e} m, max |E_theta err| {:.1e} rad", worst.0, worst.1))
}

fn bit_flip_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1_000_000 {
        let bits: u64 = rng.random();
        let bit = rng.random_range(0..64u32);
        let got = flip_bit(f64::from_bits(bits), bit).to_bits();
        ensure(got == bits ^ (1u64 << bit), || format!("{bits:#x} bit {bit}"))?;
    }
    ensure(flip_bit(1.0, 63) == -1.0, || "flip(1.0, 63)".into())?;
    ensure(flip_bit(1.0, 62) == f64::INFINITY, || "flip(1.0, 62)".into())?;
    Ok("10^6 pairs bit-exact; sign and exponent anchors".into())
}

fn baseline(tmp: &Path) -> Verdict {
    let mut parts = Vec::new();
    for name in ["following", "following_brake", "turning", "overtaking"] {
        let dir = tmp.join(format!("baseline_{name}"));
        let configs = expand_sweeps(&common::load(&format!("scenarios/{name}.adt")));
        let plan = CampaignPlan {
            configs,
            trials_per_config: 240,
            master_seed: 0,
            out_dir: dir,
            options: TrialOptions::default(),
            threads: None,
            max_new_trials: None,
        };
        let summary = run_campaign(&plan).expect("campaign runs");
        let ok = summary.records.iter().filter(|r| r.outcome.is_success()).count();
        let max_ticks = summary.records.iter().map(|r| r.ticks).max().unwrap_or(0);
        ensure(ok == 240, || format!("{name}: {ok}/240 succeeded"))?;
        ensure(max_ticks <= 6000, || format!("{name}: {max_ticks} ticks"))?;
        parts.push(format!("{name} 240/240"));
    }
    Ok(parts.join(", "))
}

fn drop_trend(tmp: &Path) -> Verdict {
    let rates = campaign("campaigns/drop_overtaking.adt", 240, &tmp.join("drop"));
    let labels = ["0", "0.01", "0.02", "0.05", "0.10"];
    ensure(rates.len() == 5, || format!("{} arms", rates.len()))?;
    for i in 0..4 {
        let (a, b) = (&rates[i], &rates[i + 1]);
        ensure(b.rate <= a.rate || overlap(a, b), || {
            format!("drop {} -> {} rises beyond CI", labels[i], labels[i + 1])
        })?;
    }
    let (lo, hi) = (&rates[1], &rates[4]);
    let joint = (lo.ci_high - lo.ci_low) + (hi.ci_high - hi.ci_low);
    ensure(lo.rate - hi.rate > joint, || format!("gap {:.4} not above joint CI width {joint:.4}", lo.rate - hi.rate))?;
    ensure(hi.strictly_below(lo), || "CIs overlap".into())?;
    let cells: Vec<String> = labels.iter().zip(&rates).map(|(l, r)| format!("{l}: {}", format_rate(r.rate))).collect();
    Ok(format!("{}; 0.10 {} vs 0.01 {}", cells.join(", "), show(hi), show(lo)))
}

fn node_sensitivity(tmp: &Path) -> Verdict {
    let rates = campaign("campaigns/node_sensitivity.adt", 240, &tmp.join("nodes"));
    let names: Vec<&str> = NodeId::ALL.iter().map(|n| n.name()).collect();
    ensure(names == ["perception", "planning", "control"] && rates.len() == 3, || "unexpected arms".into())?;
    let (perception, planning, control) = (&rates[0], &rates[1], &rates[2]);
    ensure(control.rate <= planning.rate || overlap(control, planning), || "control above planning".into())?;
    ensure(planning.rate <= perception.rate || overlap(planning, perception), || "planning above perception".into())?;
    ensure(control.strictly_below(perception), || {
        format!("control {} vs perception {}", show(control), show(perception))
    })?;
    Ok(format!("perception {}, planning {}, control {}", show(perception), show(planning), show(control)))
}

fn latency_anchors() -> Verdict {
    let model = LatencyModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let at40: Vec<f64> = (0..10_000).map(|t| model.sample_cycle(t, 40, &mut rng).e2e).collect();
    let mean40 = at40.iter().sum::<f64>() / at40.len() as f64;
    let mut at10: Vec<f64> = (0..10_000).map(|t| model.sample_cycle(t, 10, &mut rng).e2e).collect();
    at10.sort_by(f64::total_cmp);
    let p99 = nearest_rank(&at10, 99);
    ensure(mean40 > DEADLINE_MS, || format!("mean e2e at 40 objects {mean40:.2} ms"))?;
    ensure(p99 < DEADLINE_MS, || format!("p99 e2e at 10 objects {p99:.2} ms"))?;
    let flat = model.with_sigma(0.0);
    let means: Vec<f64> = (0..=100).map(|n| flat.sample_cycle(0, n, &mut rng).e2e).collect();
    ensure(means.windows(2).all(|w| w[1] >= w[0]), || "sigma=0 mean not monotone".into())?;
    let kl_self = kl_divergence(&at10, &at10, 32);
    ensure(kl_self.abs() < 1e-12, || format!("KL(P,P) = {kl_self}"))?;
    let kl = kl_divergence(&[0.0, 1.0], &[0.0, 1.0, 1.0, 1.0], 2);
    ensure((kl - 0.143841).abs() < 1e-6, || format!("two-bin KL {kl}"))?;
    Ok(format!("mean@40 {mean40:.2} ms, p99@10 {p99:.2} ms, two-bin KL {kl:.6}"))
}

fn determinism(tmp: &Path) -> Verdict {
    let files = ["records.jsonl", "results.csv", "aggregate.json", "report.md"];
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let dir = tmp.join(format!("det{threads}"));
        let out = Command::new(env!("CARGO_BIN_EXE_addt"))
            .args(["sweep", "campaigns/drop_overtaking.adt", "--trials", "60", "--seed", "5", "--threads", threads])
            .arg("--out")
            .arg(&dir)
            .current_dir(common::repo_root())
            .output()
            .expect("binary runs");
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        outputs.push(files.map(|f| std::fs::read(dir.join(f)).expect("output file")));
    }
    for (i, f) in files.iter().enumerate() {
        ensure(outputs[0][i] == outputs[1][i], || format!("{f} differs between 1 and 8 workers"))?;
    }
    Ok("300 trials, 1 vs 8 workers, 4 result files byte-identical".into())
}

fn round_trip() -> Verdict {
    let corpus = common::corpus();
    for (path, text) in &corpus {
        let spec = parse_scenario(text).map_err(|d| format!("{}: {d:?}", path.display()))?;
        let canon = serialize(&spec);
        let back = parse_scenario(&canon).map_err(|d| format!("{}: {d:?}", path.display()))?;
        ensure(back == spec && serialize(&back) == canon, || format!("{} not a fixpoint", path.display()))?;
    }
    let mut runner = TestRunner::deterministic();
    let strategy = common::arb_spec();
    for i in 0..1000 {
        let spec = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let text = serialize(&spec);
        let back = parse_scenario(&text).map_err(|d| format!("random spec {i}: {d:?}\n{text}"))?;
        ensure(back == spec && serialize(&back) == text, || format!("random spec {i} not a fixpoint"))?;
        let want: usize = spec.sweeps.iter().map(|a| a.values.len()).product();
        ensure(expand_sweeps(&spec).len() == want, || format!("random spec {i}: expansion count"))?;
    }
    Ok(format!("{} corpus files and 1000 random specs", corpus.len()))
}

fn stuck_perception() -> Verdict {
    let spec = common::load("campaigns/stuck_roi.adt");
    let config: ResolvedConfig = expand_sweeps(&spec).remove(0);
    let info = ConfigInfo::new(0, &config);
    let opts = TrialOptions { trace: true, ..TrialOptions::default() };
    let run = run_trial(&config, 0, 0, derive_seed(0, info.hash, 0), &opts);
    let rec: &TrialRecord = &run.record;

    let entry = rec.fault_log.first().ok_or("empty fault log")?;
    ensure(entry.node == NodeId::Perception && entry.state_index as usize == perc::ROI_RANGE, || {
        "wrong fault address".into()
    })?;
    ensure(entry.value_before() > 0.0 && entry.value_after() == 0.0, || "fault did not zero the range".into())?;
    let fault_tick = entry.tick;

    let before = run.trace.iter().rfind(|r| r.tick < fault_tick).ok_or("no trace before fault")?;
    ensure(before.n_tracks > 0, || "no tracks before the fault".into())?;
    let lost = run.trace.iter().find(|r| r.tick > fault_tick && r.n_tracks == 0).ok_or("tracks never deleted")?;
    let truck = &run.agent_trace[lost.tick as usize - 1][0];
    let gap = (truck[0] - lost.ego_x).hypot(truck[1] - lost.ego_y);
    ensure(gap < SensorConfig::default().max_range, || "truck out of sensor range at deletion".into())?;

    let hit = run.events.first().ok_or("no event")?;
    ensure(matches!(hit.kind, EventKind::Collision { .. }), || format!("event {:?}", hit.kind))?;
    ensure(hit.tick > lost.tick, || "collision before track loss".into())?;
    ensure(rec.outcome.kind == OutcomeKind::Collision, || format!("outcome {:?}", rec.outcome.kind))?;
    ensure(run.trace.iter().filter(|r| r.tick > lost.tick).all(|r| r.n_tracks == 0), || "tracks reappeared".into())?;
    let drift = lost.lateral - run.trace.last().unwrap().lateral;
    ensure(drift > 0.5, || format!("ego did not move back toward the truck lane ({drift:.2} m)"))?;

    let mut clean = config.clone();
    clean.scenario.faults.clear();
    let control = run_trial(&clean, 0, 0, derive_seed(0, info.hash, 0), &TrialOptions::default());
    ensure(control.record.outcome.is_success(), || "fault-free twin did not succeed".into())?;
    Ok(format!(
        "stuck at tick {fault_tick}, tracks gone at tick {} with truck {gap:.1} m away, collision at tick {}",
        lost.tick, hit.tick
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let t = tmp.path();
    let mut elapsed5 = Duration::ZERO;
    let mut failed = 0;
    let mut record = |n: u32, name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Verdict| -> Duration {
        let start = Instant::now();
        let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match (res, budget) {
            (Ok(_), Some(b)) if took > b => {
                Err(format!("took {:.2} s, budget {:.2} s", took.as_secs_f64(), b.as_secs_f64()))
            }
            (r, _) => r,
        };
        let (tag, detail) = match &res {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => {
                failed += 1;
                ("FAIL", e.clone())
            }
        };
        println!("criterion {n:>2} {tag} {name} ({:.2} s): {detail}", took.as_secs_f64());
        took
    };
    let secs = Duration::from_secs;
    record(1, "metric oracles", Some(secs(1)), &mut metric_oracles);
    record(2, "miscalibration law", Some(secs(5)), &mut miscalibration_law);
    record(3, "bit-flip oracle", Some(secs(5)), &mut bit_flip_oracle);
    record(4, "baseline calibration", Some(secs(120)), &mut || baseline(t));
    elapsed5 += record(5, "frame-drop trend", Some(secs(600)), &mut || drop_trend(t));
    record(6, "fault-location trend", Some(secs(900)), &mut || node_sensitivity(t));
    record(7, "latency anchors", Some(secs(5)), &mut latency_anchors);
    record(8, "determinism", Some(2 * elapsed5), &mut || determinism(t));
    record(9, "parser round trip", Some(secs(5)), &mut round_trip);
    record(10, "stuck perception state", Some(secs(5)), &mut stuck_perception);
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
