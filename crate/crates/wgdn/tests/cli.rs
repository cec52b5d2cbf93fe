//! End-to-end tests of the `wgdn` binary: exit codes, output files, and
//! rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

fn wgdn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgdn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const KARATE_CONFIG: &str = r#"{
  "dataset": {"source": "karate"},
  "features": {"kind": "gaussian", "dim": 8},
  "model": {"num_layers": 2, "hidden_dim": 16, "epochs": 50, "beta": 0.2},
  "seed": 1
}"#;

#[test]
fn train_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    write(&config, KARATE_CONFIG);

    let run = |out: &str| {
        let status = wgdn(
            &["train", "--config", "config.json", "--out", out],
            dir.path(),
        );
        assert!(status.status.success(), "{status:?}");
        String::from_utf8(status.stdout).unwrap()
    };
    let stdout_a = run("out_a");
    let stdout_b = run("out_b");
    assert!(stdout_a.starts_with("final loss "));
    assert_eq!(stdout_a, stdout_b);

    for name in ["checkpoint.json", "embeddings.csv", "loss_history.csv"] {
        let a = std::fs::read(dir.path().join("out_a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("out_b").join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between reruns");
    }

    let history = std::fs::read_to_string(dir.path().join("out_a/loss_history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 51); // header + 50 epochs

    let embeddings = std::fs::read_to_string(dir.path().join("out_a/embeddings.csv")).unwrap();
    assert_eq!(embeddings.lines().count(), 34);
    assert_eq!(embeddings.lines().next().unwrap().split(',').count(), 16);
}

#[test]
fn train_rejects_malformed_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    write(&config, "{ not json");
    let out = wgdn(&["train", "--config", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    write(
        &config,
        r#"{"dataset": {"source": "karate"}, "unknown_key": 1}"#,
    );
    let out = wgdn(&["train", "--config", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("unknown_key"), "stderr: {msg}");

    let out = wgdn(&["train", "--config", "missing.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_default_scaled_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    // Scaled-down counts; same checks and tolerances as the defaults.
    write(
        &dir.path().join("verify.json"),
        r#"{"prop2_instances": 10, "prop3_instances": 5, "mc_trials": 4000,
            "commutation_graphs": 3, "commutation_max_nodes": 60}"#,
    );
    let out = wgdn(
        &["verify", "--config", "verify.json", "--out", "v"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = std::fs::read_to_string(dir.path().join("v/verify_report.csv")).unwrap();
    assert!(report.starts_with("check,instance,status,detail"));
    assert!(report.contains("prop2_analytic"));
    assert!(report.contains("monte_carlo"));
    assert!(report.contains("commutation"));
    assert!(!report.contains(",fail,"));
}

#[test]
fn verify_tampered_tolerance_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("verify.json"),
        r#"{"prop2_instances": 2, "prop3_instances": 2, "mc_trials": 2000,
            "commutation_graphs": 1, "commutation_max_nodes": 40,
            "commutation_rel_tol": 0.0}"#,
    );
    let out = wgdn(
        &["verify", "--config", "verify.json", "--out", "v"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("v/verify_report.csv")).unwrap();
    assert!(report.contains(",fail,"));
}

#[test]
fn verify_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("verify.json"), r#"{"tolerance": 0}"#);
    let out = wgdn(
        &["verify", "--config", "verify.json", "--out", "v"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn remez_heat_fit_and_gcn_exactness() {
    let dir = tempfile::tempdir().unwrap();
    let out = wgdn(&["remez", "--kernel", "heat", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r/remez.csv")).unwrap();
    let coeffs: Vec<&str> = csv
        .lines()
        .filter(|l| l.starts_with("coeff,"))
        .collect();
    assert_eq!(coeffs.len(), 3); // default heat order is 2
    let leveled: f64 = csv
        .lines()
        .find(|l| l.starts_with("leveled_error,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(leveled.abs() > 0.0);

    let out = wgdn(
        &["remez", "--kernel", "gcn", "--order", "1", "--out", "r2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r2/remez.csv")).unwrap();
    let coeff = |k: usize| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("coeff,{k},")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((coeff(0) - 1.0).abs() < 1e-9);
    assert!((coeff(1) + 1.0).abs() < 1e-9);
    let leveled: f64 = csv
        .lines()
        .find(|l| l.starts_with("leveled_error,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(leveled.abs() <= 1e-9);
}

#[test]
fn remez_rejects_order_above_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = wgdn(
        &["remez", "--kernel", "heat", "--order", "20", "--out", "r"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rows_match_cells_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    write(
        &config,
        r#"{
  "dataset": {"source": "sbm", "block_sizes": [10, 10], "p_in": 0.5, "p_out": 0.05},
  "features": {"kind": "gaussian", "dim": 4},
  "model": {"num_layers": 1, "hidden_dim": 8, "epochs": 8},
  "betas": [0.0, 0.5, 1.0],
  "seed": 3
}"#,
    );
    let out = wgdn(&["sweep", "--config", "sweep.json", "--out", "s1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("s1/sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "beta,decoder_mode,final_loss,probe_accuracy");
    assert_eq!(csv.lines().count(), 7); // header + 3 betas x 2 modes

    let out = wgdn(&["sweep", "--config", "sweep.json", "--out", "s2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv2 = std::fs::read_to_string(dir.path().join("s2/sweep.csv")).unwrap();
    assert_eq!(csv, csv2);

    // A single (beta, mode) cell yields a single row.
    write(
        &config,
        r#"{
  "dataset": {"source": "sbm", "block_sizes": [10, 10], "p_in": 0.5, "p_out": 0.05},
  "features": {"kind": "gaussian", "dim": 4},
  "model": {"num_layers": 1, "hidden_dim": 8, "epochs": 8},
  "betas": [0.5],
  "modes": ["wiener"],
  "seed": 3
}"#,
    );
    let out = wgdn(&["sweep", "--config", "sweep.json", "--out", "s3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("s3/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn probe_separable_blobs_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut emb = String::new();
    let mut labels = String::new();
    for i in 0..40 {
        let class = i % 2;
        let offset = if class == 0 { -4.0 } else { 4.0 };
        emb.push_str(&format!("{},{}\n", offset + 0.1 * i as f64 / 40.0, offset));
        labels.push_str(&format!("{class}\n"));
    }
    write(&dir.path().join("emb.csv"), &emb);
    write(&dir.path().join("labels.txt"), &labels);

    let run = || {
        wgdn(
            &["probe", "--embeddings", "emb.csv", "--labels", "labels.txt", "--seed", "5"],
            dir.path(),
        )
    };
    let out = run();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), "accuracy 1");

    // Fixed seed reproducibility.
    let again = run();
    assert_eq!(String::from_utf8(again.stdout).unwrap().trim(), "accuracy 1");

    let out = wgdn(
        &["probe", "--embeddings", "nope.csv", "--labels", "labels.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
