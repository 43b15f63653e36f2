use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ionqaoa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionqaoa"))
        .args(args)
        .env("IONQAOA_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn chain_prints_com_mode_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = ionqaoa(dir.path(), &["chain", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first_line = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(first_line.contains("1.000000"), "{first_line}");

    let path = dir.path().join("coupling_base_n2.json");
    let before = fs::read(&path).unwrap();
    assert_eq!(ionqaoa(dir.path(), &["chain", "--n", "2"]).status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), before);
    let text = String::from_utf8(before).unwrap();
    assert!(text.contains("\"config_hash\""));
    assert!(text.contains("\"code_version\""));
}

#[test]
fn single_ion_has_zero_coupling() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ionqaoa(dir.path(), &["chain", "--n", "1"]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("coupling_base_n1.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["result"]["c"], serde_json::json!([0.0]));
}

#[test]
fn output_flag_wins_over_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = ionqaoa(env_dir.path(), &["chain", "--n", "2", "--output-dir", flag_dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.path().join("chain_n2.json").exists());
    assert!(!env_dir.path().join("chain_n2.json").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ionqaoa(dir.path(), &["express", "--n", "3", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(ionqaoa(dir.path(), &["svd", "--n", "3", "--k-states", "9"]).status.code(), Some(2));
    assert_eq!(ionqaoa(dir.path(), &["chain", "--n", "0"]).status.code(), Some(2));
    assert_eq!(ionqaoa(dir.path(), &["bench", "--family", "ghz-prep"]).status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[problem]\nqubits = 4\n").unwrap();
    let out = ionqaoa(dir.path(), &["chain", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    // Radial confinement barely above axial: a long chain buckles.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("zigzag.toml");
    fs::write(&config, "[trap]\nomega_z_hz = 0.9e6\n").unwrap();
    let out = ionqaoa(dir.path(), &["chain", "--n", "10", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_without_heuristic_gives_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    let out = ionqaoa(dir.path(), &["train", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ionqaoa heuristic"));
}

#[test]
fn heuristic_then_train_then_trained_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["--n", "3", "--count", "2", "--seed", "5"];
    let run = |cmd: &str, extra: &[&str]| {
        let mut args = vec![cmd];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        let out = ionqaoa(d, &args);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    };
    run("heuristic", &[]);
    let text = fs::read_to_string(d.join("heuristic_sk_n3.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let outcome = &rec["outcome"];
        assert!(outcome["n_evals_train"].as_u64().unwrap() > 0);
        assert!(outcome["alpha_star"].as_f64().unwrap() > 0.0);
        assert_eq!(outcome["a_star"].as_array().unwrap().len(), 3);
    }

    run("train", &["--runs", "1", "--restarts", "3"]);
    let text = fs::read_to_string(d.join("train_sk_n3.jsonl")).unwrap();
    // Header plus p_max = n records per instance.
    assert_eq!(text.lines().count(), 1 + 2 * 3);

    run("svd", &["--configuration", "trained", "--instance", "1", "--depth", "2", "--k-states", "4"]);
    let csv = fs::read_to_string(d.join("svd_trained_n3_p2.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert_eq!(csv.lines().nth(1), Some("k,sigma"));
    assert_eq!(csv.lines().count(), 2 + 4);

    run("express", &["--samples", "1000", "--bins", "10", "--depth", "2"]);
    let csv = fs::read_to_string(d.join("express_asymmetric_n3_p2.csv")).unwrap();
    let total: u64 = csv.lines().skip(2).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1000);
}

#[test]
fn small_bench_writes_all_tables_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench", "--n", "3", "--count", "2", "--cycles", "2", "--runs", "1", "--restarts", "3", "--m-max", "2"];
    let out = ionqaoa(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("cycle 1: solved fraction"));
    let names = ["attempts.jsonl", "standard.jsonl", "summary.json", "cycles.csv", "depths.csv"];
    let first: Vec<Vec<u8>> = names.iter().map(|f| fs::read(dir.path().join(format!("bench_n3_{f}"))).unwrap()).collect();

    let again = ionqaoa(dir.path(), &[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(again.status.code(), Some(0));
    for (name, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(dir.path().join(format!("bench_n3_{name}"))).unwrap(), bytes, "{name}");
    }
}
