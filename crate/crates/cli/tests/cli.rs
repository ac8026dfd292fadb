use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tclab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tclab"))
        .args(args)
        .current_dir(dir)
        .env_remove("TCLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = tclab(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn solve_is_byte_identical_across_reruns() {
    let d = tempfile::tempdir().unwrap();
    let args = ["solve", "--n", "2", "--kappa", "0.05", "--x", "0.1", "--utility", "shortfall:K=1", "--seed", "7"];
    ok(d.path(), &[&args[..], &["--out", "a.json"]].concat());
    ok(d.path(), &[&args[..], &["--out", "b.json"]].concat());
    assert_eq!(read(d.path(), "a.json"), read(d.path(), "b.json"));
    let v = json(d.path(), "a.json");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["n"], 2);
    assert!(v["value"].as_f64().unwrap() >= v["no_trade_value"].as_f64().unwrap());
    let m = json(d.path(), "a.json.manifest.json");
    assert_eq!(m["command"], "solve");
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn converge_has_one_row_per_n() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["converge", "--n-list", "2,4,6,8", "--kappa", "0.05", "--x", "0.1", "--utility", "shortfall:K=1", "--out", "c.csv"],
    );
    let text = read(d.path(), "c.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,kappa,x,value,diff_prev,runtime_ms,states_visited");
    assert_eq!(lines.len(), 5);
    let diff = |l: &str| l.split(',').nth(4).unwrap().to_string();
    assert_eq!(diff(lines[1]), "");
    assert!(lines[2..].iter().all(|l| diff(l).parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn arbitrage_pin() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["arbitrage", "--n", "2", "--kappa", "0", "--xi", "+1,-1", "--out", "a.json"]);
    let v = json(d.path(), "a.json");
    assert!((v["terminal_wealth"].as_f64().unwrap() - 1.22041).abs() < 1e-4);
    ok(d.path(), &["arbitrage", "--kappa", "0", "--xi", "-1,+1", "--format", "csv", "--out", "t.csv"]);
    let text = read(d.path(), "t.csv");
    assert!(text.starts_with("k,t,S_k,gamma_k,V_k\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let d = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["solve", "--n", "6", "--kappa", "0.05", "--x", "0.1", "--include-policy"],
        &["check-cps", "--n-list", "4,64", "--samples", "200", "--seed", "5", "--tv-max-n", "4"],
        &["mc-limit", "--paths", "300", "--steps", "50", "--seed", "9", "--compare-n", "16", "--format", "json"],
        &["arbitrage", "--n", "16", "--kappa", "0.05", "--samples", "200", "--seed", "2"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let a = format!("r{i}_1.out");
        let b = format!("r{i}_4.out");
        ok(d.path(), &[args, &["--threads", "1", "--out", a.as_str()][..]].concat());
        ok(d.path(), &[args, &["--threads", "4", "--out", b.as_str()][..]].concat());
        assert_eq!(read(d.path(), &a), read(d.path(), &b), "{args:?}");
    }
}

#[test]
fn manifest_round_trips() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["project", "--n", "3", "--seed", "4", "--amplitude", "0.2", "--out", "p.json"]);
    ok(d.path(), &["project", "--config", "p.json.manifest.json", "--out", "q.json"]);
    assert_eq!(read(d.path(), "p.json"), read(d.path(), "q.json"));
    let out = tclab(d.path(), &["solve", "--config", "p.json.manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_take_precedence_over_config_file() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("cfg.json"), r#"{"n": 3, "kappa": 0.2, "x": 0.1}"#).unwrap();
    ok(d.path(), &["solve", "--config", "cfg.json", "--kappa", "0.05", "--out", "s.json"]);
    let v = json(d.path(), "s.json");
    assert_eq!(v["n"], 3);
    assert_eq!(v["kappa"], 0.05);
    std::fs::write(d.path().join("bad.json"), r#"{"n": 3, "nonsense": 1}"#).unwrap();
    assert_eq!(tclab(d.path(), &["solve", "--config", "bad.json"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| tclab(d.path(), args).status.code();
    assert_eq!(code(&["solve", "--n", "2", "--bogus"]), Some(1));
    assert_eq!(code(&["solve", "--n", "2", "--kappa", "1.5"]), Some(1));
    assert_eq!(code(&["solve", "--n", "2", "--utility", "cubic"]), Some(1));
    assert_eq!(code(&["mc-limit", "--paths", "10"]), Some(1));
    assert_eq!(code(&["solve", "--n", "6", "--max-work", "10"]), Some(2));
    assert_eq!(code(&["solve", "--n", "4", "--solver", "brute", "--out", "b.json"]), Some(2));
    std::fs::write(d.path().join("file"), "").unwrap();
    assert_eq!(code(&["solve", "--n", "1", "--out", "file/x.json"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn default_output_directory_comes_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tclab"))
        .args(["mz-dist", "--f", "0,2,2", "--g", "0"])
        .current_dir(d.path())
        .env("TCLAB_OUT_DIR", d.path().join("runs"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json(&d.path().join("runs"), "mz-dist.json");
    assert!((v["mz_distance"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    assert!(d.path().join("runs/mz-dist.json.manifest.json").exists());
}

#[test]
fn market_and_prediction_tables() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen-market", "--n", "3", "--format", "csv", "--out", "m.csv"]);
    let text = read(d.path(), "m.csv");
    assert!(text.starts_with("scenario_id,prob,s_T,x1_T,x2_T\n"));
    assert_eq!(text.lines().count(), 9);
    ok(d.path(), &["gen-market", "--xi", "+1,+1", "--out", "m.json"]);
    let v = json(d.path(), "m.json");
    assert_eq!(v["xi"], serde_json::json!([1, 1]));
    assert!((v["s_tilde"][2].as_f64().unwrap() - 2.2205).abs() < 1e-3);
    ok(d.path(), &["predict", "--n", "2", "--psi", "ind_price_T_gt_1", "--out", "y.csv"]);
    let text = read(d.path(), "y.csv");
    assert!(text.starts_with("psi,t,node_id,y_value\n"));
    assert!(text.contains("ind_price_T_gt_1,0.0,0,0.25\n"));
}
