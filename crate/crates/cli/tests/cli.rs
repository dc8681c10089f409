use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gridvis"));
    c.env_remove("GRIDVIS_RULES");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_is_deterministic_and_rejects_three_robots() {
    let a = bin().args(["gen", "--n", "9", "--width", "100", "--height", "100", "--seed", "1"]).output().unwrap();
    let b = bin().args(["gen", "--n", "9", "--width", "100", "--height", "100", "--seed", "1"]).output().unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let small = bin().args(["gen", "--n", "4", "--width", "5", "--height", "5", "--seed", "7"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&small.stdout).unwrap();
    let robots = v["robots"].as_array().unwrap();
    assert_eq!(robots.len(), 4);
    assert!(robots.iter().all(|r| r["color"] == "A"));

    let three = bin().args(["gen", "--n", "3", "--seed", "1"]).output().unwrap();
    assert_eq!(code(&three), 1);
    assert!(three.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("mine.rules");
    std::fs::write(&rules, "X: myC=A & #(x:any,y:any,*)=0 -> (_, B)\n").unwrap();
    let out = dir.path().join("three.json");
    let custom = bin()
        .args(["gen", "--n", "3", "--seed", "1", "--rules"])
        .arg(&rules)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&custom), 0);
    assert!(String::from_utf8_lossy(&custom.stderr).contains("warning"));
    assert!(out.is_file());

    let too_small = bin().args(["gen", "--n", "5", "--width", "2", "--height", "2", "--seed", "1"]).output().unwrap();
    assert_eq!(code(&too_small), 1);
}

#[test]
fn ce_n9_run_check_replay_render() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ce9.jsonl");
    let run = bin().arg("run").arg(fixture("c_e_n9.json")).args(["--scheduler", "fsync", "--out"]).arg(&trace).output().unwrap();
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let check = bin().arg("check").arg(&trace).output().unwrap();
    assert_eq!(code(&check), 0);
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["final"], "C_F");
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);

    let again = dir.path().join("again.jsonl");
    let replay = bin().arg("run").arg("--replay").arg(&trace).arg("--out").arg(&again).output().unwrap();
    assert_eq!(code(&replay), 0);
    assert_eq!(std::fs::read(&trace).unwrap(), std::fs::read(&again).unwrap());

    let first = bin().arg("render").arg(&trace).args(["--frame", "0"]).output().unwrap();
    let text = stdout(&first);
    let grid: String = text.lines().filter_map(|l| l.split_once('|').map(|(_, row)| row)).collect();
    assert_eq!(grid.matches('o').count(), 6);
    assert_eq!(grid.matches('#').count(), 3);
    let svg = bin().arg("render").arg(&trace).args(["--format", "svg"]).output().unwrap();
    let svg = stdout(&svg);
    assert_eq!(svg.matches("class=\"robot-b\"").count(), 9);
    assert!(svg.contains("<text"));
}

#[test]
fn tampered_trace_fails_check_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let run = bin()
        .arg("run")
        .arg(fixture("scatter_n6.json"))
        .args(["--scheduler", "async-random", "--seed", "3", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(&trace).unwrap();
    let forged = text.replacen("\"recolor\":\"B\"", "\"recolor\":\"A\"", 1);
    assert_ne!(forged, text);
    std::fs::write(&trace, forged).unwrap();
    let check = bin().arg("check").arg(&trace).output().unwrap();
    assert_eq!(code(&check), 2);
    let replay = bin().arg("run").arg("--replay").arg(&trace).output().unwrap();
    assert_eq!(code(&replay), 2);
}

#[test]
fn exit_codes_for_usage_and_step_limit() {
    let no_seed = bin().arg("run").arg(fixture("scatter_n6.json")).args(["--scheduler", "ssync"]).output().unwrap();
    assert_eq!(code(&no_seed), 1);
    let limited = bin()
        .arg("run")
        .arg(fixture("scatter_n6.json"))
        .args(["--scheduler", "fsync", "--step-limit", "20"])
        .output()
        .unwrap();
    assert_eq!(code(&limited), 3);
    let unknown = bin().arg("frobnicate").output().unwrap();
    assert_eq!(code(&unknown), 1);
    let bad_format = bin().arg("render").arg(fixture("c_a.json")).args(["--format", "csv"]).output().unwrap();
    assert_eq!(code(&bad_format), 1);
    let missing = bin().args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(code(&missing), 1);
}

#[test]
fn non_cf_termination_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("idle.rules");
    std::fs::write(&rules, "X: myC=B & #(x:any,y:any,*)=0 -> (_, A)\n").unwrap();
    let run = bin().arg("run").arg(fixture("scatter_n6.json")).arg("--rules").arg(&rules).output().unwrap();
    assert_eq!(code(&run), 2);
}

#[test]
fn rules_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("broken.rules");
    std::fs::write(&rules, "R1: myC=Q -> (x+, _)\n").unwrap();
    let run = bin().arg("run").arg(fixture("c_e_n4.json")).env("GRIDVIS_RULES", &rules).output().unwrap();
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("broken.rules"));
}

#[test]
fn bench_csv_columns() {
    let out = bin().args(["bench", "--n", "4..5", "--seeds", "3", "--scheduler", "async-random", "--seed", "10"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let headers: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(&headers[..5], ["n", "D", "rounds", "area", "conflicts"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let n: i64 = row[0].parse().unwrap();
        let area: i64 = row[3].parse().unwrap();
        assert!(area <= (2 * n - 2).pow(2));
        assert_eq!(&row[4], "0");
        assert_eq!(&row[8], "C_F");
    }
}

#[test]
fn explore_fixture_is_clean() {
    let out = bin().arg("explore").arg(fixture("c_e_n4.json")).output().unwrap();
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["complete"], true);
    assert_eq!(report["stuck"], 0);
}
