use std::fs;
use std::path::{Path, PathBuf};

use qfec_cli::config::ConfigDoc;
use qfec_cli::{canonical_config, parse_config, run_command_with, ConfigError};
use qfec_core::trajectory::{LogicalState, SimConfig};
use qfec_core::{axis_lowering, BlochVector, ErrorChannel};

const LOWERING: &str = "[[[0,0],[1,0]],[[0,0],[0,0]]]";

fn lowering_doc(n: usize) -> String {
    let channels: Vec<String> = (0..n)
        .map(|q| format!(r#"{{"qubit": {q}, "label": "decay{q}", "E": {LOWERING}}}"#))
        .collect();
    format!(
        r#"{{"n": {n}, "dt": 0.001, "duration": 0.5, "channels": [{}]}}"#,
        channels.join(", ")
    )
}

/// Lowering operators along x, y and z on every qubit, each with rate 1/3.
fn rank3_doc(n: usize) -> String {
    let scale = qfec_core::linalg::real((1.0f64 / 3.0).sqrt());
    let channels = (0..n)
        .flat_map(|q| {
            [BlochVector::X, BlochVector::Y, BlochVector::Z]
                .map(|axis| ErrorChannel::new(q, axis_lowering(axis) * scale))
        })
        .collect();
    canonical_config(&SimConfig::new(n, channels, 0.001, 0.2))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["qfec"];
    argv.extend_from_slice(args);
    let code = run_command_with(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn minimal_document_gets_defaults() {
    let cfg = parse_config(&format!(
        r#"{{"n": 1, "dt": 0.01, "duration": 1, "channels": [{{"qubit": 0, "E": {LOWERING}}}]}}"#
    ))
    .unwrap();
    assert_eq!(cfg.n, 1);
    assert_eq!(cfg.channels.len(), 1);
    assert_eq!(cfg.channels[0].gamma(), 0.0);
    assert_eq!(cfg.channels[0].phi(), 0.0);
    assert!(cfg.feedback && cfg.driving);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.trajectories, 1);
    assert_eq!(cfg.initial_state, LogicalState::Index(0));
    assert_eq!(cfg.channels[0].operator, qfec_core::linalg::sigma_minus());
}

#[test]
fn missing_dt_names_the_field() {
    let err = parse_config(r#"{"n": 1, "duration": 1, "channels": []}"#).unwrap_err();
    match err {
        ConfigError::Schema { field, .. } => assert_eq!(field, "dt"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn qubit_out_of_range() {
    let err = parse_config(&format!(
        r#"{{"n": 4, "dt": 0.01, "duration": 1, "channels": [{{"qubit": 5, "E": {LOWERING}}}]}}"#
    ))
    .unwrap_err();
    match err {
        ConfigError::Schema { field, message } => {
            assert_eq!(field, "channels[0].qubit");
            assert!(message.contains("out of range"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn malformed_document_reports_position() {
    let err = parse_config("{\"n\": 1,\n  \"dt\": }").unwrap_err();
    match err {
        ConfigError::Malformed { line, column, .. } => {
            assert_eq!(line, 2);
            assert!(column > 0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_square_matrix_rejected() {
    let err = parse_config(
        r#"{"n": 1, "dt": 0.01, "duration": 1, "channels": [{"qubit": 0, "E": [[[0,0],[1,0],[0,0]],[[0,0],[0,0]]]}]}"#,
    )
    .unwrap_err();
    assert!(matches!(err, ConfigError::Schema { ref field, .. } if field == "channels[0].E"));
}

#[test]
fn negative_gamma_and_dt_rejected() {
    let bad_gamma = format!(
        r#"{{"n": 1, "dt": 0.01, "duration": 1, "channels": [{{"qubit": 0, "E": {LOWERING}, "gamma": -0.1}}]}}"#
    );
    assert!(matches!(
        parse_config(&bad_gamma),
        Err(ConfigError::Schema { .. })
    ));
    let bad_dt = r#"{"n": 1, "dt": 0, "duration": 1}"#;
    assert!(
        matches!(parse_config(bad_dt), Err(ConfigError::Schema { ref field, .. }) if field == "dt")
    );
}

#[test]
fn canonical_round_trip() {
    let text = format!(
        r#"{{"n": 2, "dt": 0.001, "duration": 0.3, "seed": 11, "trajectories": 5, "feedback": false,
            "initial_state": [[0.6, 0], [0, 0.8]],
            "code": [[[1,0,0],[1,0,0]]],
            "channels": [{{"qubit": 0, "label": 3, "E": {LOWERING}, "gamma": 0.5, "phi": 7.0}},
                         {{"qubit": 1, "E": [[[0.1, 0.2], [0.3, -0.4]], [[0.5, 0.6], [-0.7, 0.8]]]}}]}}"#
    );
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.channels[0].label, "3");
    assert_eq!(cfg.channels[1].label, "1");
    let again = parse_config(&canonical_config(&cfg)).unwrap();
    assert_eq!(cfg, again);
    let doc: ConfigDoc = serde_json::from_str(&canonical_config(&again)).unwrap();
    assert_eq!(doc, ConfigDoc::from_sim_config(&cfg));
}

#[test]
fn verify_rank3_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rank3.json", &rank3_doc(4));
    let report = dir.path().join("report.json");
    let (code, text) = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["logical_count"], 2);
    assert_eq!(json["kind"], "erasure");
    assert_eq!(json["passed"], true);
}

#[test]
fn verify_wrong_code_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&lowering_doc(3)).unwrap();
    doc["code"] = serde_json::json!([[[0, 0, 1], [0, 0, 1], [0, 0, 1]]]);
    let cfg = write(dir.path(), "wrong.json", &doc.to_string());
    let report = dir.path().join("report.json");
    let (code, _) = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let residual = json["correctability"]["channels"][0]["residual"]
        .as_f64()
        .unwrap();
    assert!((residual - 0.5).abs() < 1e-12, "{residual}");
}

#[test]
fn synthesize_lists_generator_and_hamiltonian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "two.json", &lowering_doc(2));
    let (code, text) = run(&["synthesize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.contains("logical qubits = 1"), "{text}");
    assert!(text.contains("generator 0: XX"), "{text}");
    assert!(text.contains("+0.250000000000 XY"), "{text}");
    assert!(text.contains("+0.250000000000 YX"), "{text}");
}

#[test]
fn synthesis_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "odd.json", &rank3_doc(5));
    let (code, _) = run(&["synthesize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["transmogrify", "--config", "x.json"]).0, 2);
    assert_eq!(run(&["simulate"]).0, 2);
    assert_eq!(
        run(&["simulate", "--config", "/nonexistent/config.json"]).0,
        2
    );
}

#[test]
fn simulate_is_deterministic_and_guards_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "two.json", &lowering_doc(2));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = [
        "--config",
        cfg.to_str().unwrap(),
        "--trajectories",
        "1",
        "--seed",
        "7",
    ];
    for out in [&a, &b] {
        let mut args = vec!["simulate", "--output", out.to_str().unwrap()];
        args.extend_from_slice(&common);
        assert_eq!(run(&args).0, 0);
    }
    let csv = fs::read(&a).unwrap();
    assert_eq!(csv, fs::read(&b).unwrap());

    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("time,mean_fidelity,std_fidelity,cumulative_jumps")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 501);
    for r in &rows {
        assert_eq!(r.len(), 4);
        for v in &r[..3] {
            v.parse::<f64>().unwrap();
        }
        r[3].parse::<u64>().unwrap();
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap())
            .unwrap();
    for p in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(p.as_str().unwrap()).exists());
    }
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);

    let mut again = vec!["simulate", "--output", a.to_str().unwrap()];
    again.extend_from_slice(&common);
    assert_eq!(run(&again).0, 2);
    again.push("--force");
    assert_eq!(run(&again).0, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn flag_overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "two.json", &lowering_doc(2));
    let out = dir.path().join("o.csv");
    let (code, _) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--dt",
        "0.01",
        "--no-feedback",
        "--no-driving",
    ]);
    assert_eq!(code, 0);
    // 0.5 / 0.01 steps plus t = 0
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 52);
}

#[test]
fn oracle_compare_writes_trace_distances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "two.json", &lowering_doc(2));
    let out = dir.path().join("oracle.csv");
    let (code, _) = run(&[
        "oracle-compare",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--trajectories",
        "200",
        "--no-feedback",
        "--no-driving",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,trace_distance"));
    let rows: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|d| (0.0..0.2).contains(d)), "{rows:?}");
}
