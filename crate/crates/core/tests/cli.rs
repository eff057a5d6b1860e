use std::path::PathBuf;

use infdiag::cli::run;

fn model(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models");
    root.join(name).to_string_lossy().into_owned()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let status = run(std::iter::once("infdiag").chain(args.iter().copied()), &mut out, &mut err);
    (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn mev(stdout: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with("MEV: ")).expect("MEV line");
    line["MEV: ".len()..].parse().unwrap()
}

#[test]
fn validate_accepts_umbrella() {
    let (status, out, _) = invoke(&["validate", &model("umbrella.json")]);
    assert_eq!(status, 0);
    assert!(out.starts_with("ok: 4 variables, 1 decisions"));
}

#[test]
fn validate_reports_cycle() {
    let (status, _, err) = invoke(&["validate", &model("cyclic.json")]);
    assert_eq!(status, 1);
    assert!(err.starts_with("CYCLE"), "{err}");
}

#[test]
fn onedir_and_oracle_agree_on_umbrella() {
    let (status, out, _) = invoke(&["solve", &model("umbrella.json"), "--method", "onedir"]);
    assert_eq!(status, 0);
    assert!((mev(&out) - 84.0).abs() < 1e-9);
    assert!(out.contains("forecast=sunny -> leave"));
    assert!(out.contains("forecast=rainy -> take"));
    let (status, oracle, _) = invoke(&["solve", &model("umbrella.json"), "--method", "oracle"]);
    assert_eq!(status, 0);
    assert!((mev(&oracle) - 84.0).abs() < 1e-9);
}

#[test]
fn evidence_flag_conditions_the_solve() {
    let (status, out, _) = invoke(&["solve", &model("umbrella.json"), "--evidence", "forecast=rainy"]);
    assert_eq!(status, 0);
    // P(forecast=rainy) = 0.7*0.2 + 0.3*0.8
    let p: f64 = out.lines().find_map(|l| l.strip_prefix("P(E=e): ")).unwrap().parse().unwrap();
    assert!((p - 0.38).abs() < 1e-12);
}

#[test]
fn info_lists_relevant_sets() {
    let (status, out, _) = invoke(&["info", &model("umbrella_tv.json")]);
    assert_eq!(status, 0);
    assert!(out.contains("decision order: tv_station, bring_umbrella"));
    assert!(out.contains("bring_umbrella: information {tv_station, forecast} relevant {tv_station, forecast}"));
}

#[test]
fn bad_arguments_exit_one() {
    let (status, _, err) = invoke(&["solve", &model("umbrella.json"), "--method", "magic"]);
    assert_eq!(status, 1);
    assert!(!err.is_empty());
    let (status, _, _) = invoke(&["solve", "/nonexistent/model.json"]);
    assert_eq!(status, 1);
}

#[test]
fn unknown_evidence_exits_one() {
    let (status, _, err) = invoke(&["solve", &model("umbrella.json"), "--evidence", "moon=full"]);
    assert_eq!(status, 1);
    assert!(!err.is_empty());
    let (status, _, _) = invoke(&["solve", &model("umbrella.json"), "--evidence", "forecast=snowy"]);
    assert_eq!(status, 1);
}

#[test]
fn mode_mismatch_is_unsupported() {
    let (status, _, err) = invoke(&["solve", &model("umbrella.json"), "--mode", "valuation"]);
    assert_eq!(status, 2);
    assert!(err.starts_with("UNSUPPORTED"), "{err}");
    let (status, _, err) = invoke(&["solve", &model("umbrella.json"), "--method", "onedir", "--mode", "likelihood"]);
    assert_eq!(status, 2);
    assert!(err.starts_with("UNSUPPORTED"), "{err}");
}

#[test]
fn writes_dot_and_policy_files() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("tree.dot");
    let policy = dir.path().join("policy.json");
    let (status, _, _) = invoke(&[
        "solve",
        &model("umbrella.json"),
        "--method",
        "onedir",
        "--dot",
        dot.to_str().unwrap(),
        "--out",
        policy.to_str().unwrap(),
    ]);
    assert_eq!(status, 0);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("max bring_umbrella then sum forecast"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&policy).unwrap()).unwrap();
    assert_eq!(json["decisions"][0]["choices"], serde_json::json!(["leave", "take"]));
}

#[test]
fn missing_memory_arc_needs_completion_flag() {
    let source = std::fs::read_to_string(model("umbrella_tv.json")).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&source).unwrap();
    let arcs = json["arcs"].as_array_mut().unwrap();
    arcs.retain(|a| a[0] != "tv_station");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("forgetful.json");
    std::fs::write(&path, serde_json::to_string(&json).unwrap()).unwrap();
    let path = path.to_str().unwrap();

    let (status, _, err) = invoke(&["validate", path]);
    assert_eq!(status, 1);
    assert!(err.starts_with("NO_FORGETTING"), "{err}");
    let (status, _, _) = invoke(&["--complete-no-forgetting", "validate", path]);
    assert_eq!(status, 0);
    let (status, _, _) = invoke(&["solve", path, "--complete-no-forgetting"]);
    assert_eq!(status, 0);
}
