use std::path::{Path, PathBuf};
use std::process::Command;

use route_receipt_cli::{run, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("..")
}

fn golden(name: &str) -> String {
    root().join("core/fixtures/golden").join(name).display().to_string()
}

fn surface(name: &str) -> String {
    root().join("core/fixtures/surfaces").join(name).display().to_string()
}

fn scenario(name: &str) -> String {
    root()
        .join("gateway/fixtures/scenarios")
        .join(name)
        .display()
        .to_string()
}

struct Ran {
    code: i32,
    out: String,
    err: String,
}

fn rr(args: &[&str]) -> Ran {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("rr").chain(args.iter().copied()), &mut out, &mut err);
    Ran {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn json(ran: &Ran) -> Value {
    serde_json::from_str(&ran.out).unwrap_or_else(|e| panic!("{e}: {}", ran.out))
}

#[test]
fn golden_receipt_validates() {
    let ran = rr(&["validate", &golden("golden_s7.json")]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.out);
    assert_eq!(ran.out, "valid\n");
}

#[test]
fn missing_redactions_is_one_error() {
    let ran = rr(&["--json", "validate", &golden("broken_missing_redactions.json")]);
    assert_eq!(ran.code, EXIT_INVALID);
    let report = json(&ran);
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["kind"], "missing_required");
    assert_eq!(errors[0]["path"], "/redactions");
}

#[test]
fn northstar_eval_lists_drift() {
    let ran = rr(&[
        "eval",
        "--policy",
        &golden("northstar_policy.json"),
        &golden("golden_s7.json"),
    ]);
    assert_eq!(ran.code, EXIT_INVALID);
    assert!(ran.out.contains("model_drift"), "{}", ran.out);

    let ran = rr(&[
        "--json",
        "eval",
        "--policy",
        &golden("northstar_policy.json"),
        &golden("golden_s7.json"),
    ]);
    let results = json(&ran);
    assert_eq!(results[0]["violations"].as_array().unwrap().len(), 1);
    assert_eq!(results[0]["violations"][0]["code"], "model_drift");
}

#[test]
fn eval_reads_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(golden("golden_s7.canonical.json")).unwrap();
    let mut other: Value = serde_json::from_str(&text).unwrap();
    other["receipt_id"] = "rr-00000000000000000000000000000002".into();
    other["resolved_model"] = "contract-pro-2026-03-02".into();
    let path = dir.path().join("two.jsonl");
    std::fs::write(&path, format!("{}\n\n{}\n", text.trim(), other)).unwrap();
    let ran = rr(&[
        "--json",
        "eval",
        "--policy",
        &golden("northstar_policy.json"),
        path.to_str().unwrap(),
    ]);
    assert_eq!(ran.code, EXIT_INVALID);
    let results = json(&ran);
    assert_eq!(results.as_array().unwrap().len(), 2);
    assert_eq!(results[1]["violations"], serde_json::json!([]));
}

#[test]
fn end_user_view_renders_labels() {
    let ran = rr(&["view", "--audience", "end_user", &golden("golden_s7.json")]);
    assert_eq!(ran.code, EXIT_OK);
    assert!(ran.out.contains("model updated since previous answer"));
    assert!(ran.out.contains("\"resolved_model\""));

    let ran = rr(&[
        "view",
        "--audience",
        "end_user",
        "--previous-model",
        "contract-pro-2026-03-02",
        &golden("golden_s7.json"),
    ]);
    let line = ran.out.lines().find(|l| l.starts_with("model updated")).unwrap();
    assert!(line.ends_with("yes"), "{line}");
}

#[test]
fn views_narrow_with_the_audience() {
    let full = rr(&["--json", "view", "--audience", "auditor", &golden("full.json")]);
    let end_user = rr(&["--json", "view", "--audience", "end_user", &golden("full.json")]);
    assert!(json(&full).get("provider_chain").is_some());
    assert!(json(&end_user).get("provider_chain").is_none());
}

#[test]
fn normalize_reproduces_the_downgrade() {
    let ran = rr(&[
        "--json",
        "normalize",
        "--surface",
        "openai_priority",
        "--envelope",
        &golden("envelope_minimal.json"),
        &surface("openai_priority.json"),
    ]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    let r = json(&ran);
    assert_eq!(r["service_tier"]["effective"], "default");
    assert_eq!(r["fallback"]["reason"], "capacity");
    let again = rr(&[
        "--json",
        "normalize",
        "--surface",
        "openai_priority",
        "--envelope",
        &golden("envelope_minimal.json"),
        &surface("openai_priority.json"),
    ]);
    assert_eq!(ran.out, again.out);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(rr(&["validate"]).code, EXIT_USAGE);
    assert_eq!(rr(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(
        rr(&["view", "--audience", "root", &golden("golden_s7.json")]).code,
        EXIT_USAGE
    );
    assert_eq!(
        rr(&[
            "probe",
            "fallback",
            "--scenario",
            &scenario("chain.json"),
            "--trigger",
            "meteor@3"
        ])
        .code,
        EXIT_USAGE
    );
}

#[test]
fn io_errors_exit_3() {
    let ran = rr(&["validate", "/nonexistent/receipt.json"]);
    assert_eq!(ran.code, EXIT_IO);
    assert!(ran.err.contains("/nonexistent/receipt.json"));
}

#[test]
fn schema_is_the_export() {
    let ran = rr(&["schema"]);
    assert_eq!(ran.code, EXIT_OK);
    let ours: Value = serde_json::from_str(&ran.out).unwrap();
    let exported: Value = serde_json::from_str(route_receipt::export_schema()).unwrap();
    assert_eq!(ours, exported);
}

#[test]
fn probes_from_the_command_line() {
    let ran = rr(&[
        "--json",
        "probe",
        "alias-drift",
        "--scenario",
        &scenario("drift_30_70.json"),
        "--alias",
        "contract-pro-latest",
    ]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    let at: Vec<u64> = json(&ran)["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["request_index"].as_u64().unwrap())
        .collect();
    assert_eq!(at, vec![30, 70]);

    let ran = rr(&[
        "probe",
        "alias-drift",
        "--scenario",
        &scenario("chain.json"),
        "--alias",
        "nope",
    ]);
    assert_eq!(ran.code, EXIT_INVALID);

    let ran = rr(&[
        "probe",
        "fallback",
        "--scenario",
        &scenario("chain.json"),
        "--trigger",
        "rate_limit@3",
        "--trigger",
        "unavailable_model@5",
    ]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    assert!(ran.out.contains("all fallbacks visible: true"), "{}", ran.out);
}

fn store_with_golden(dir: &Path) -> String {
    let store = dir.join("store").display().to_string();
    let ran = rr(&["ingest", "--store", &store, &golden("golden_s7.json")]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    store
}

#[test]
fn ingest_aggregate_export_purge() {
    let dir = tempfile::tempdir().unwrap();
    let store = store_with_golden(dir.path());

    let dup = rr(&["ingest", "--store", &store, &golden("golden_s7.json")]);
    assert_eq!(dup.code, EXIT_INVALID);

    let ran = rr(&[
        "--json",
        "aggregate",
        "--metric",
        "alias_resolution_histogram",
        "--from",
        "2026-06-15T00:00:00Z",
        "--to",
        "2026-06-16T00:00:00Z",
        &store,
    ]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    assert_eq!(json(&ran)["value"], serde_json::json!({"contract-pro-2026-04-18": 1}));

    let bad = rr(&[
        "aggregate",
        "--metric",
        "fallback_rate",
        "--from",
        "2026-06-16T00:00:00Z",
        "--to",
        "2026-06-15T00:00:00Z",
        &store,
    ]);
    assert_eq!(bad.code, EXIT_USAGE);

    let ran = rr(&["export", "--store", &store]);
    assert_eq!(ran.code, EXIT_OK);
    let canonical = std::fs::read_to_string(golden("golden_s7.canonical.json")).unwrap();
    assert_eq!(ran.out.trim_end(), canonical.trim_end());

    let ran = rr(&["--json", "purge", "--store", &store, "--now", "2030-01-01T00:00:00Z"]);
    assert_eq!(ran.code, EXIT_OK, "{}", ran.err);
    assert_eq!(
        json(&ran)["purged"],
        serde_json::json!(["rr-7e3f0c2a9b414d6c8a51f0e2d4b6c890"])
    );
    let again = rr(&["--json", "purge", "--store", &store, "--now", "2030-01-01T00:00:00Z"]);
    assert_eq!(json(&again)["purged"], serde_json::json!([]));
}

#[test]
fn machine_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let store = store_with_golden(dir.path());
    let runs: Vec<Vec<&str>> = vec![
        vec!["--json", "validate", "GOLDEN"],
        vec!["--json", "view", "--audience", "developer", "GOLDEN"],
        vec!["--json", "eval", "--policy", "POLICY", "GOLDEN"],
        vec!["--json", "aggregate", "--metric", "fallback_rate", "STORE"],
        vec![
            "--json",
            "probe",
            "alias-drift",
            "--scenario",
            "DRIFT",
            "--alias",
            "contract-pro-latest",
            "--n",
            "40",
        ],
        vec![
            "--json",
            "probe",
            "fallback",
            "--scenario",
            "CHAIN",
            "--trigger",
            "provider_error@1",
        ],
        vec!["--json", "schema"],
    ];
    let (g, p, d, c) = (
        golden("golden_s7.json"),
        golden("northstar_policy.json"),
        scenario("drift_30_70.json"),
        scenario("chain.json"),
    );
    for args in runs {
        let args: Vec<&str> = args
            .into_iter()
            .map(|a| match a {
                "GOLDEN" => g.as_str(),
                "POLICY" => p.as_str(),
                "STORE" => store.as_str(),
                "DRIFT" => d.as_str(),
                "CHAIN" => c.as_str(),
                other => other,
            })
            .collect();
        let a = rr(&args);
        let b = rr(&args);
        assert_eq!(a.out, b.out, "{args:?}");
        assert!(serde_json::from_str::<Value>(&a.out).is_ok(), "{args:?}: {}", a.out);
    }
}

#[test]
fn binary_reads_store_path_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let store = store_with_golden(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_rr"))
        .args(["--json", "aggregate", "--metric", "fallback_rate"])
        .env("RR_STORE_PATH", &store)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["denominator"], 1);

    let out = Command::new(env!("CARGO_BIN_EXE_rr")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
}
