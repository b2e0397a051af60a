//! End-to-end checks of the `qem-ics` binary: run/fit/sample subcommands,
//! exit codes, and deterministic output files.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qem-ics"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qem-ics-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_error_propagation_and_fit() {
    let dir = temp_dir("prop");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "experiment": "error_propagation",
                "family": {{"kind": "periodic_cycling", "n": [4], "two_qubit_count": [16, 64, 256], "gate": "cnot"}},
                "noise": {{"kind": "gate_depolarising", "epsilon": 0.001}},
                "n_test": 200,
                "seed": 11,
                "output_path": {:?}
            }}"#,
            out
        ),
    );
    let status = binary().args(["run", "--config"]).arg(&config).status().unwrap();
    assert!(status.success());
    let csv = out.join("error_propagation.csv");
    assert!(csv.exists());
    assert!(out.join("error_propagation.meta.json").exists());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,N,d_i,d_x,d_y,d_z,circuits"));
    assert_eq!(text.lines().count(), 4);

    // D decays roughly like 1/sqrt(N); the fitted exponent must be negative.
    let fit = binary()
        .args(["fit", "--x", "N", "--y", "d_x", "--input"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(fit.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    let exponent = parsed["exponent"].as_f64().unwrap();
    assert!(exponent < -0.2, "exponent {exponent}");
}

#[test]
fn rerun_with_same_seed_is_bit_identical() {
    let dir = temp_dir("determinism");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let config = write_config(
        &dir,
        r#"{
            "experiment": "epsilon_histogram",
            "family": {"kind": "periodic_cycling", "n": [4], "two_qubit_count": [8]},
            "noise": {"kind": "global_depolarising", "epsilon": 0.002},
            "n_test": 40,
            "seed": 3,
            "output_path": "unused"
        }"#,
    );
    for (out, workers) in [(&out_a, "1"), (&out_b, "3")] {
        let status = binary()
            .args(["run", "--workers", workers, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("epsilon_histogram.csv")).unwrap();
    let b = std::fs::read(out_b.join("epsilon_histogram.csv")).unwrap();
    assert_eq!(a, b, "different worker counts changed the CSV bytes");
}

#[test]
fn global_depolarising_histogram_is_a_delta() {
    let dir = temp_dir("gdm");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        r#"{
            "experiment": "epsilon_histogram",
            "family": {"kind": "periodic_cycling", "n": [4], "two_qubit_count": [8]},
            "noise": {"kind": "global_depolarising", "epsilon": 0.002},
            "n_test": 50,
            "seed": 5,
            "output_path": "unused"
        }"#,
    );
    let status = binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("epsilon_histogram.csv")).unwrap();
    let expected = 1.0 - (1.0 - 0.002f64).powi(8);
    let mut std_row_seen = false;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "sample" {
            let eps_c: f64 = fields[3].parse().unwrap();
            assert!((eps_c - expected).abs() < 1e-10);
        }
        if fields[0] == "std" {
            std_row_seen = true;
            let sd: f64 = fields[3].parse().unwrap();
            assert!(sd < 1e-10, "fluctuation-free model must give a delta histogram");
        }
    }
    assert!(std_row_seen);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = temp_dir("badcfg");
    let config = write_config(&dir, r#"{"experiment": "unknown_kind"}"#);
    let output = binary().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    let missing = binary()
        .args(["run", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn sample_command_emits_valid_json_lines() {
    let dir = temp_dir("sample");
    // A small frame file in the documented JSON schema.
    let frame_path = dir.join("frame.json");
    std::fs::write(
        &frame_path,
        r#"{"n":2,"observable":"+ZI","elements":[{"slot":0},{"slot":1},{"cz":[0,1]},{"slot":0},{"slot":1}]}"#,
    )
    .unwrap();
    for algorithm in ["nonuniform", "uniform"] {
        let out_path = dir.join(format!("{algorithm}.jsonl"));
        let status = binary()
            .args(["sample", "--algorithm", algorithm, "--count", "25", "--seed", "9"])
            .arg("--frame")
            .arg(&frame_path)
            .arg("--out")
            .arg(&out_path)
            .status()
            .unwrap();
        assert!(status.success());
        let text = std::fs::read_to_string(&out_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 25);
        for line in lines {
            let value: serde_json::Value = serde_json::from_str(line).unwrap();
            let f = value["f"].as_i64().unwrap();
            assert!(f == 1 || f == -1);
            let w = value["w"].as_u64().unwrap();
            assert!(w <= 2);
            assert!(value["weight_factor"].as_f64().unwrap() > 0.0);
            // The embedded circuit must parse and be error-sensitive.
            let circuit =
                qem_ics::circuit::Circuit::from_json(&value["circuit"].to_string()).unwrap();
            let ideal = qem_ics::stabilizer::ideal_expectation(&circuit).unwrap();
            assert_eq!(i64::from(ideal), f);
        }
    }
}
