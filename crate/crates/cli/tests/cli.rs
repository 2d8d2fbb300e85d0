use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn hsqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsqc")).args(args).output().unwrap()
}

fn hsqc_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hsqc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_instance(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = hsqc(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.join(name);
    fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn tau_reproduces_table_row() {
    let v = json(&hsqc(&["tau", "--pgs", "0.52", "--tf", "300"]));
    assert!((v["tau_s"].as_f64().unwrap() - 1882.30).abs() < 0.1);
    let v = json(&hsqc(&["tau", "--pgs", "0.99", "--tf", "7"]));
    assert_eq!(v["tau_s"].as_f64().unwrap(), 7.0);
    let v = json(&hsqc(&["tau", "--pgs", "0", "--tf", "7"]));
    assert!(v["tau_s"].is_null());
    assert_eq!(v["estimate"]["tau"]["kind"], "infinite");
}

#[test]
fn tau_from_energy_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("energies.txt");
    fs::write(&path, "-2.0\n-2.0\n-1.5\n-2.0000000001\n").unwrap();
    let v = json(&hsqc(&["tau", "--energies", path.to_str().unwrap(), "--e-gs", "-2", "--tf", "1"]));
    assert_eq!(v["estimate"]["p_gs"].as_f64().unwrap(), 0.75);
    assert_eq!(hsqc(&["tau", "--energies", path.to_str().unwrap(), "--tf", "1"]).status.code(), Some(5));
}

#[test]
fn exact_on_single_field() {
    let v = json(&hsqc_stdin(&["exact", "-"], r#"{"n":1,"terms":[{"idx":[0],"w":1}]}"#));
    assert_eq!(v["energy"].as_f64().unwrap(), -1.0);
    assert_eq!(v["ground_state"], "1");
    assert_eq!(v["degeneracy"], 1);
}

#[test]
fn generate_exact_sa_hsqc_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write_instance(dir.path(), "raw.json", &["generate", "--topology", "ring", "--qubits", "12", "--rho2", "2", "--seed", "7"]);
    let annotated = hsqc(&["exact", "--annotate", &raw]);
    assert!(annotated.status.success());
    let inst_path = dir.path().join("gs.json");
    fs::write(&inst_path, &annotated.stdout).unwrap();
    let inst = inst_path.to_str().unwrap();

    let exact = json(&hsqc(&["exact", inst]));
    let e_gs = exact["energy"].as_f64().unwrap();
    let stored: Value = serde_json::from_slice(&annotated.stdout).unwrap();
    assert_eq!(stored["metadata"]["ground_state_energy"].as_f64().unwrap(), e_gs);

    let sa = json(&hsqc(&["sa", inst, "--sweeps", "500", "--runs", "16"]));
    assert!(sa["report"]["best_energy"].as_f64().unwrap() >= e_gs - 1e-9);
    assert!(sa["gap_percent"].as_f64().unwrap() >= 0.0);

    let run = json(&hsqc(&["hsqc", inst, "--trials", "2", "--sa-sweeps", "100", "--sa-runs", "8", "--shots", "400", "--cvar", "40"]));
    for trial in run["trials"].as_array().unwrap() {
        let summary = &trial["summary"];
        assert!(summary["gap_percent"].as_f64().unwrap() >= 0.0);
        assert_eq!(summary["ground_state_energy"].as_f64().unwrap(), e_gs);
        assert_eq!(trial["stages"].as_array().unwrap().len(), 3);
    }
    assert!(run["p_gs"].as_f64().is_some());
}

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "i.json", &["generate", "--topology", "ring", "--qubits", "8", "--rho2", "2", "--seed", "1"]);
    let trace = dir.path().join("trace.csv");
    let out = hsqc(&["sa", &inst, "--sweeps", "5", "--runs", "2", "--trace", trace.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "run,sweep,temperature,current_energy,best_energy");
    assert_eq!(lines.count(), 10);

    let table = dir.path().join("hsqc.csv");
    let out = hsqc(&[
        "hsqc", &inst, "--final", "sa", "--trials", "2", "--sa-sweeps", "10", "--sa-runs", "2", "--shots", "50",
        "--cvar", "5", "--final-sweeps", "10", "--final-runs", "4", "--csv", table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "seed,stage,min_energy,T_SA,T_BFDCQO,T_final,T_total");
    let stages: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(stages, ["sa", "bfdcqo", "sa_final", "sa", "bfdcqo", "sa_final"]);
}

#[test]
fn connectivity_file_topology() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    fs::write(&map, r#"{"num_qubits":4,"edges":[[0,1],[1,2],[2,3],[3,0]]}"#).unwrap();
    let topology = format!("file:{}", map.to_str().unwrap());
    let v = json(&hsqc(&["generate", "--topology", &topology, "--swap-rounds", "1", "--rho2", "1", "--rho3", "0"]));
    let pairs: Vec<&Value> = v["terms"].as_array().unwrap().iter().filter(|t| t["idx"].as_array().unwrap().len() == 2).collect();
    assert_eq!(pairs.len(), 2);
}

#[test]
fn warm_start_and_seed_bitstring_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "i.json", &["generate", "--topology", "ring", "--qubits", "8", "--rho2", "2", "--seed", "2"]);
    let bits = dir.path().join("seed.txt");
    fs::write(&bits, "01100101\n").unwrap();
    let b = bits.to_str().unwrap();
    let v = json(&hsqc(&["dcqo", &inst, "--shots", "100", "--cvar", "10", "--iters", "0", "--seed-bitstring", b]));
    assert_eq!(v["report"]["best"], "01100101");
    let v = json(&hsqc(&["mts", &inst, "--warm-start", b, "--generations", "5"]));
    assert!(v["report"]["best_energy"].as_f64().is_some());

    fs::write(&bits, "0110\n").unwrap();
    assert_eq!(hsqc(&["mts", &inst, "--warm-start", b]).status.code(), Some(5));
    fs::write(&bits, "01x00101\n").unwrap();
    assert_eq!(hsqc(&["mts", &inst, "--warm-start", b]).status.code(), Some(3));
}

#[test]
fn exit_codes_are_distinct() {
    assert_eq!(hsqc(&["sa", "--nonsense"]).status.code(), Some(2));
    assert_eq!(hsqc_stdin(&["exact", "-"], "not json").status.code(), Some(3));
    assert_eq!(
        hsqc_stdin(&["exact", "-"], r#"{"n":2,"terms":[{"idx":[1,0],"w":1}]}"#).status.code(),
        Some(3)
    );
    let dir = tempfile::tempdir().unwrap();
    let big = write_instance(dir.path(), "big.json", &["generate", "--topology", "ring", "--qubits", "30", "--rho2", "2"]);
    let out = hsqc(&["exact", &big]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("HSQC_MAX_QUBITS"));
    assert_eq!(hsqc(&["tau", "--pgs", "1.5", "--tf", "1"]).status.code(), Some(5));
    assert_eq!(hsqc(&["exact", "/definitely/not/here.json"]).status.code(), Some(6));
    let small = write_instance(dir.path(), "s.json", &["generate", "--topology", "ring", "--qubits", "6", "--rho2", "2"]);
    let out = hsqc(&["dcqo", &small, "--shots", "10", "--cvar", "20"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn cap_can_be_raised_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "i.json", &["generate", "--topology", "ring", "--qubits", "6", "--rho2", "2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_hsqc"))
        .args(["exact", &inst])
        .env("HSQC_MAX_QUBITS", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn default_heavy_hex_instance() {
    let v = json(&hsqc(&["generate", "--seed", "0"]));
    assert_eq!(v["n"], 156);
    assert_eq!(v["metadata"]["topology"], "heavy-hex:8x16");
    let ones = v["terms"].as_array().unwrap().iter().filter(|t| t["idx"].as_array().unwrap().len() == 1).count();
    assert_eq!(ones, 156);
    let again = json(&hsqc(&["generate", "--seed", "0"]));
    assert_eq!(v, again);
}
