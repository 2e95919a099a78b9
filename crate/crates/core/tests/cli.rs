mod common;

use std::fs;
use std::process::{Command, Output};

fn addt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_addt")).args(args).current_dir(common::repo_root()).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_accepts_the_corpus() {
    let files: Vec<String> = common::corpus().into_iter().map(|(p, _)| p.display().to_string()).collect();
    let args: Vec<&str> = std::iter::once("check").chain(files.iter().map(String::as_str)).collect();
    let out = addt(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), files.len());
}

#[test]
fn check_reports_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.adt");
    fs::write(&bad, "scenario \"x\"\nroad { lanes: 0, lane_width: 3.5, segments: [[100, 0]] }\nego { lane: 0, s: 0, speed: 10 }\nmission follow { target_s: 50, timeout: 10 }\n").unwrap();
    let out = addt(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.adt:2:") && err.contains(": error: "), "{err}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("o");
    let o = out_dir.to_str().unwrap();
    assert_eq!(addt(&["run", "campaigns/drop_overtaking.adt", "--trials", "1", "--out", o]).status.code(), Some(1));
    assert_eq!(addt(&["run", "no/such/file.adt", "--out", o]).status.code(), Some(2));
    assert_eq!(addt(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(addt(&["--help"]).status.code(), Some(0));
    assert_eq!(addt(&["report", tmp.path().join("missing").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn manifest_lists_registers() {
    let out = addt(&["manifest"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("node,index,name,hardware\nperception,0,"));
    for node in ["perception", "planning", "control"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{node},"))));
    }
}

#[test]
fn sweep_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    let d = dir.to_str().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_addt"))
        .args(["sweep", "campaigns/node_sensitivity.adt", "--trials", "4", "--seed", "3", "--out", d])
        .env("ADDT_THREADS", "2")
        .current_dir(common::repo_root())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.contains("| Scenario |"));
    let csv = addt(&["report", d, "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap(), fs::read_to_string(dir.join("results.csv")).unwrap());
    let json = addt(&["report", d, "--format", "json"]);
    assert_eq!(String::from_utf8(json.stdout).unwrap(), fs::read_to_string(dir.join("aggregate.json")).unwrap());
    assert_eq!(String::from_utf8(addt(&["report", d]).stdout).unwrap(), md);
}

#[test]
fn fault_file_overrides_scenario_faults() {
    let tmp = tempfile::tempdir().unwrap();
    let faults = tmp.path().join("faults.json");
    fs::write(
        &faults,
        r#"[{"node":"perception","state_index":2,"bit":0,"trigger_tick":450,"mode":"stuck","value":0.0}]"#,
    )
    .unwrap();
    let dir = tmp.path().join("o");
    let out = addt(&[
        "run",
        "scenarios/overtaking.adt",
        "--trials",
        "1",
        "--trace",
        "--faults",
        faults.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let record: serde_json::Value =
        serde_json::from_str(fs::read_to_string(dir.join("records.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(record["outcome"]["kind"], "collision");
    assert_eq!(record["fault_log"][0]["tick"], 450);
    assert!(dir.join("traces/c000_t0000.faults.json").exists());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "[{\"node\":\"perception\"}]").unwrap();
    let out = addt(&[
        "run",
        "scenarios/overtaking.adt",
        "--trials",
        "1",
        "--faults",
        bad.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
