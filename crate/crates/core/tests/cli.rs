use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vickrey-bandit"));
    c.env_remove("VICKREY_BANDIT_THREADS");
    c
}

const CONFIG: &str = r#"{
  "horizon": 300,
  "replications": 3,
  "master_seed": 1,
  "values": {"kind": "iid", "distribution": {"kind": "bernoulli", "p": 0.5}},
  "opponents": {"kind": "fixed_sequence", "bids": [0.25, 0.5, 0.75]},
  "strategy": {"kind": "exptree", "gap": 0.25}
}"#;

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("rounds.csv");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "2", "--seed", "9"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(summary["replications"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("rep,t,bid,m,won,v,gain,cum_regret\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 300);

    let report = bin().arg("report").arg("--input").arg(&out).output().unwrap();
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.starts_with("t,n,mean,stderr,median\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn thread_env_var_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("r{threads}.csv"));
        let status = bin()
            .env("VICKREY_BANDIT_THREADS", threads)
            .arg("simulate")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_prints_one_row_per_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .args(["--horizons", "100,300,1000,3000"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(String::from_utf8(out.stderr).unwrap().contains("slope"));
}

#[test]
fn bad_config_gives_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, CONFIG.replace("\"horizon\"", "\"horizn\"")).unwrap();
    let out = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().last().unwrap();
    let fields: Vec<&str> = line.split('\t').collect();
    assert_eq!(&fields[..2], &["error", "config"]);

    let missing = bin().args(["simulate", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8(missing.stderr).unwrap().starts_with("error\tio\t"));
}

#[test]
fn accept_runs_selected_criteria() {
    let out = bin().args(["accept", "--criteria", "8"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("[PASS] criterion 8"));
}
