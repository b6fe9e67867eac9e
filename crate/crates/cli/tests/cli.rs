use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudit-ns"))
        .args(args)
        .env_remove("QUDIT_NS_MEMORY_CAP")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn verify_passes_at_default_tolerance() {
    let out = run(&["verify", "--d", "2", "--trials", "100", "--tol", "1e-10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 100);
    assert!(v["max_residual_ns"].as_f64().unwrap() < 1e-10);
}

#[test]
fn verify_fails_at_absurd_tolerance() {
    let out = run(&["verify", "--d", "2", "--trials", "10", "--tol", "1e-16"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("residual_ns"), "{err}");
    assert_eq!(stdout_json(&out)["passed"], false);
}

#[test]
fn verify_stored_reference_encoder() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.json");
    let path = path.to_str().unwrap();
    assert_eq!(code(&run(&["export-reference", "--output", path])), 0);

    let stored: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(stored["generator"], "reference");
    assert_eq!(stored["layout"], "multiplicity-major");
    assert_eq!(stored["entries"].as_array().unwrap().len(), 64);

    let out = run(&["verify", "--encoder", path, "--trials", "20"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["generator"], "reference");

    assert_eq!(code(&run(&["verify", "--encoder", path, "--d", "3"])), 2);
}

#[test]
fn build_encoder_writes_loadable_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("enc.json");
    let path = path.to_str().unwrap();
    assert_eq!(
        code(&run(&["build-encoder", "--d", "3", "--output", path])),
        0
    );
    let stored: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(stored["d"], 3);
    assert_eq!(stored["rows"], 81);
    assert_eq!(stored["cols"], 81);
    assert_eq!(stored["generator"], "symmetrizer");
    assert_eq!(
        code(&run(&["verify", "--encoder", path, "--trials", "10"])),
        0
    );
}

#[test]
fn rate_table_csv_and_json() {
    let out = run(&["rate-table", "--d", "2", "--kmax", "3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "d,k,n,rate\n2,1,3,1/3\n2,2,5,2/5\n2,3,7,3/7\n"
    );

    let out = run(&["rate-table", "--d", "3", "--kmax", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout_json(&out),
        serde_json::json!([
            {"d": 3, "k": 1, "n": 4, "rate": "1/4"},
            {"d": 3, "k": 2, "n": 7, "rate": "2/7"}
        ])
    );
}

#[test]
fn simulate_su_passes() {
    let out = run(&[
        "simulate", "--d", "3", "--k", "2", "--noise", "su", "--trials", "50",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["n"], 7);
    assert_eq!(v["trials"], 50);
    assert_eq!(v["seeds"].as_array().unwrap().len(), 50);
    for x in v["per_slot_worst_infidelity"].as_array().unwrap() {
        assert!(x.as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn simulate_sl_passes() {
    let out = run(&[
        "simulate", "--d", "2", "--k", "1", "--noise", "sl", "--trials", "50",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["noise"], "sl(d,C)");
}

#[test]
fn simulate_fails_at_absurd_tolerance() {
    let out = run(&[
        "simulate", "--d", "2", "--k", "2", "--trials", "20", "--tol", "1e-300",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("max state residual"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec![
            "simulate", "--d", "2", "--k", "2", "--trials", "30", "--seed", "11",
        ],
        vec!["verify", "--d", "3", "--trials", "20", "--seed", "5"],
        vec!["build-encoder", "--d", "2", "--seed", "4"],
    ] {
        let mut files = Vec::new();
        for i in 0..2 {
            let path = dir.path().join(format!("{}-{i}.json", args[0]));
            let mut full = args.clone();
            full.extend(["--output", path.to_str().unwrap()]);
            assert_eq!(code(&run(&full)), 0);
            files.push(fs::read(&path).unwrap());
        }
        assert_eq!(
            files[0], files[1],
            "{} output differs between runs",
            args[0]
        );
    }

    let a = run(&[
        "simulate", "--d", "2", "--k", "1", "--trials", "5", "--seed", "1",
    ]);
    let b = run(&[
        "simulate", "--d", "2", "--k", "1", "--trials", "5", "--seed", "2",
    ]);
    assert_ne!(stdout_json(&a)["seeds"], stdout_json(&b)["seeds"]);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["verify", "--d", "1"],
        vec!["verify", "--d", "2", "--tol", "0"],
        vec!["verify", "--d", "2", "--tol", "-1e-3"],
        vec!["verify", "--d", "2", "--trials", "0"],
        vec!["simulate", "--d", "2", "--k", "0"],
        vec!["simulate", "--d", "2", "--k", "1", "--noise", "gl"],
        vec!["verify", "--d", "2", "--format", "csv"],
        vec!["rate-table", "--d", "2"],
        vec!["frobnicate"],
        vec!["verify"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}

#[test]
fn memory_cap_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_qudit-ns"))
        .args(["simulate", "--d", "2", "--k", "3", "--trials", "1"])
        .env("QUDIT_NS_MEMORY_CAP", "16")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("16"));

    let out = Command::new(env!("CARGO_BIN_EXE_qudit-ns"))
        .args(["build-encoder", "--d", "2"])
        .env("QUDIT_NS_MEMORY_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    assert_eq!(code(&run(&["build-encoder", "--d", "5"])), 2);
}
