mod common;

use common::{cli, graph_path};
use graph_surgery::cli::{EXIT_NOT_IDENTIFIABLE, EXIT_NO_ESTIMATOR, EXIT_OK};
use graph_surgery::identify::parse_expr;

#[test]
fn identify_output_parses_back() {
    for (graph, x, y, z) in [
        ("diagnosis", "A", "T,C", ""),
        ("front_door", "M", "T", "Z"),
        ("bike_sharing", "H,T,W,F", "R", ""),
        ("instrument", "X,T", "Y", ""),
    ] {
        let (code, out, err) = cli(&["identify", "--graph", &graph_path(graph), "--do", x, "--on", y, "--given", z]);
        assert_eq!(code, EXIT_OK, "{graph}: {err}");
        let e = parse_expr(out.trim()).unwrap();
        assert_eq!(e.to_string(), out.trim());
    }
}

#[test]
fn identify_json_reports_failures() {
    let (code, out, _) = cli(&["identify", "--graph", &graph_path("instrument"), "--do", "X", "--on", "T", "--format", "json"]);
    assert_eq!(code, EXIT_NOT_IDENTIFIABLE);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "not-identified");
    assert!(v["failure"]["subgraph"].as_array().unwrap().len() >= 2);
}

#[test]
fn discrete_surgery_fit_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (train, valid, cfg) = common::write_discrete_diagnosis(dir.path(), 4000, 51);
    let model = common::path_string(&dir.path().join("model.json"));
    let (code, out, err) = cli(&[
        "surgery", "--graph", &graph_path("diagnosis"), "--train", &train, "--valid", &valid, "--seed", "1",
        "--data-config", &cfg, "--model-out", &model,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("chosen"), "{out}");

    let (code, out, err) = cli(&["predict", "--model", &model, "--data", &valid, "--data-config", &cfg]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("row,predicted,p_0,p_1\n"), "{out}");
    assert_eq!(out.lines().count(), 1001);

    let (code, out, err) = cli(&["evaluate", "--model", &model, "--data", &valid, "--data-config", &cfg]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("nll "), "{out}");

    let fitted = common::path_string(&dir.path().join("fit.json"));
    let (code, _, err) = cli(&[
        "fit", "--expr", "P(T) P(C|T,A)", "--target", "T", "--train", &train, "--seed", "0", "--data-config", &cfg,
        "--format", "json", "--out", &fitted,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, out, _) = cli(&["evaluate", "--model", &fitted, "--data", &valid, "--data-config", &cfg]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("nll "));
}

#[test]
fn continuous_target_shift_surgery_and_missing_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let (train, valid) = common::continuous_diagnosis(dir.path(), 52);
    let model = common::path_string(&dir.path().join("model.json"));
    let (code, out, err) = cli(&[
        "surgery", "--graph", &graph_path("target_shift"), "--train", &train, "--valid", &valid, "--seed", "2",
        "--model-out", &model,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let chosen = out.lines().find(|l| l.starts_with("chosen")).unwrap();
    assert!(!chosen.contains("P(T)"), "{chosen}");
    let (code, out, err) = cli(&["predict", "--model", &model, "--data", &valid]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("row,mean,variance\n"));

    let (code, _, err) = cli(&[
        "surgery", "--graph", &graph_path("no_stable"), "--target", "T", "--train", &train, "--valid", &valid, "--seed", "2",
    ]);
    assert_eq!(code, EXIT_NO_ESTIMATOR);
    assert!(err.contains("no stable surgery estimator for predicting T"), "{err}");
}

#[test]
fn every_command_is_deterministic() {
    for (command, same) in common::determinism_check() {
        assert!(same, "{command}");
    }
}
