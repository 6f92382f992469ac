use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_knowsum"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn fails_with(args: &[&str], code: i32) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error");
    assert_eq!(err["error"]["exit_code"], code);
    err
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn estimate_singletons() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.csv", "s,n_s\n1,10\n");
    let r = json_ok(&["estimate", "--counts", &h, "--k", "1", "--t", "1"]);
    assert_eq!(r["command"], "estimate");
    assert_eq!(r["result"]["unseen"], 5.0);
    assert_eq!(r["result"]["total"], 15.0);
    assert_eq!(r["result"]["skr"], 0.666666666667);
    assert_eq!(r["inputs"][0]["role"], "counts");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn estimate_echoes_defaults() {
    let r = json_ok(&["estimate", "--counts", fixture("counts.csv").to_str().unwrap()]);
    assert_eq!(r["config"]["k"], 8);
    assert_eq!(r["config"]["t"], 100.0);
    assert_eq!(r["result"]["n_seen"], 8);
    assert_eq!(r["result"]["coefficients"].as_array().unwrap().len(), 8);
}

#[test]
fn estimate_csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run(&[
        "estimate",
        "--counts",
        fixture("counts.csv").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("field,value\nn,22\nn_seen,8\n"), "{text}");
}

#[test]
fn missing_file_is_an_io_error() {
    let err = fails_with(&["estimate", "--counts", "/nonexistent/counts.csv"], 2);
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn malformed_counts_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "item,count\na,1\nb,zero\n");
    let err = fails_with(&["estimate", "--counts", &bad], 1);
    assert!(err["error"]["message"].as_str().unwrap().contains(":3:"));
}

#[test]
fn empty_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e.csv", "item,count\n");
    let err = fails_with(&["estimate", "--counts", &empty], 1);
    assert_eq!(err["error"]["kind"], "empty_input");
}

#[test]
fn usage_errors_exit_2() {
    let c = fixture("counts.csv");
    let c = c.to_str().unwrap();
    fails_with(&["estimate"], 2);
    fails_with(&["estimate", "--counts", c, "--k", "0"], 2);
    fails_with(&["estimate", "--counts", c, "--t=-1"], 2);
    fails_with(&["estimate", "--counts", c, "--verifier", "keyword"], 2);
    let o = run(&["estimate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_identity_split() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "seq.txt", "A\nA\nB\nC\nC\nD\nE\nE\n");
    let r = json_ok(&["validate", "--sequence", &seq, "--no-shuffle", "--k", "2", "--t", "1", "--reps", "3"]);
    for rep in r["result"]["per_rep"].as_array().unwrap() {
        assert_eq!(rep["estimate"], 1.25);
        assert_eq!(rep["ground_truth"], 2);
    }
    assert_eq!(r["config"]["shuffle"], false);
    assert_eq!(r["result"]["std_estimate"], 0.0);
}

#[test]
fn validate_defaults() {
    let r = json_ok(&["validate", "--counts", fixture("counts.csv").to_str().unwrap()]);
    assert_eq!(r["config"]["reps"], 100);
    assert_eq!(r["config"]["r_obs"], "1/2");
    assert_eq!(r["config"]["t"], 1.0);
    assert_eq!(r["config"]["shuffle"], true);
    assert_eq!(r["result"]["per_rep"].as_array().unwrap().len(), 100);
}

#[test]
fn validate_rejects_bad_splits() {
    let c = fixture("counts.csv");
    let c = c.to_str().unwrap();
    fails_with(&["validate", "--counts", c, "--r-obs", "0"], 2);
    fails_with(&["validate", "--counts", c, "--r-obs", "1"], 2);
    fails_with(&["validate", "--counts", c, "--r-obs", "1/2", "--t", "1.5"], 2);
    fails_with(&["validate", "--counts", c, "--reps", "0"], 2);
}

#[test]
fn select_k_candidates() {
    let c = fixture("counts.csv");
    let c = c.to_str().unwrap();
    let r = json_ok(&["select-k", "--counts", c, "--reps", "20"]);
    let ks: Vec<u64> = r["result"]["candidates"].as_array().unwrap().iter().map(|x| x["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [6, 8, 10]);
    let r = json_ok(&["select-k", "--counts", c, "--reps", "20", "--candidates", "4"]);
    assert_eq!(r["result"]["selected_k"], 4);
    fails_with(&["select-k", "--counts", c, "--candidates", ""], 2);
}

#[test]
fn simulate_reports() {
    let r = json_ok(&["simulate", "--family", "uniform", "--support", "10", "--n", "10", "--trials", "1"]);
    assert_eq!(r["result"]["std_estimate"], 0.0);
    assert_eq!(r["config"]["t"], 1.0);
    assert_eq!(r["result"]["analytic_expected_unseen"], 2.27101785509);
    assert!(r["inputs"].as_array().unwrap().is_empty());
    fails_with(&["simulate", "--family", "zipf", "--support", "10", "--n", "10", "--exponent=-1"], 2);
    fails_with(&["simulate", "--family", "explicit", "--probs", "0.5,0.4", "--n", "10"], 2);
    fails_with(&["simulate", "--family", "uniform", "--support", "0", "--n", "10"], 2);
    assert_eq!(run(&["simulate", "--family", "nope", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn sweep_grids() {
    let c = fixture("counts.csv");
    let c = c.to_str().unwrap();
    let o = run(&["sweep", "--counts", c, "--t-grid", "", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "t,unseen,skr\n");
    let r = json_ok(&["sweep", "--counts", c, "--k-grid", "2,4,6", "--t", "2"]);
    assert_eq!(r["result"]["axis"], "k");
    assert_eq!(r["result"]["points"].as_array().unwrap().len(), 3);
    fails_with(&["sweep", "--counts", c, "--t-grid", "1", "--k-grid", "2"], 2);
    fails_with(&["sweep", "--counts", c], 2);
    fails_with(&["sweep", "--counts", c, "--t-grid", "2,1"], 2);
}

#[test]
fn cluster_keyword_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let r = json_ok(&[
        "cluster",
        "--responses",
        fixture("responses.jsonl").to_str().unwrap(),
        "--verifier",
        "keyword",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = &r["result"]["summary"];
    assert_eq!(s["items"], 48);
    assert_eq!(s["valid"].as_u64().unwrap() + s["rejected"].as_u64().unwrap(), 48);
    assert_eq!(r["config"]["verify"]["keywords_preset"], "theorem-strict");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("pythagorean theorem,6\n"), "{text}");
    // the counts file feeds straight into estimate
    json_ok(&["estimate", "--counts", out.to_str().unwrap()]);
}

#[test]
fn cluster_embedding_needs_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let responses = fixture("responses.jsonl");
    let base = ["cluster", "--responses", responses.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let err = fails_with(&[&base[..], &["--cluster", "embedding"]].concat(), 2);
    assert_eq!(err["error"]["kind"], "config");
    let emb = fixture("embeddings.csv");
    let allow = fixture("allowlist.txt");
    let r = json_ok(&[&base[..], &["--verifier", "keyword", "--cluster", "embedding", "--embeddings", emb.to_str().unwrap()]].concat());
    assert_eq!(r["config"]["cluster"]["q"], 0.5);
    assert_eq!(r["config"]["cluster"]["knn"], 10);
    let r = json_ok(
        &[&base[..], &["--verifier", "fuzzy", "--allowlist", allow.to_str().unwrap(), "--cluster", "embedding", "--embeddings", emb.to_str().unwrap(), "--knn", "1"]]
            .concat(),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    // the misspelling and the apostrophe variant merge into their neighbors
    assert!(text.contains("pythagorean theorem,7\n"), "{text}");
    assert!(text.contains("stokes theorem,2\n"), "{text}");
    assert!(text.contains("noether's theorem,2\n"), "{text}");
    assert!(r["result"]["summary"]["threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn estimate_from_responses_includes_pipeline() {
    let r = json_ok(&[
        "estimate",
        "--responses",
        fixture("responses.jsonl").to_str().unwrap(),
        "--verifier",
        "allowlist",
        "--allowlist",
        fixture("allowlist.txt").to_str().unwrap(),
        "--k",
        "4",
        "--t",
        "1",
    ]);
    assert_eq!(r["result"]["pipeline"]["rejected_by_reason"]["empty_after_normalize"], 1);
    let roles: Vec<&str> = r["inputs"].as_array().unwrap().iter().map(|i| i["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["responses", "allowlist"]);
    fails_with(&["estimate", "--responses", fixture("responses.jsonl").to_str().unwrap(), "--verifier", "fuzzy"], 2);
}

#[test]
fn rerun_from_report_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c = fixture("counts.csv");
    for args in [
        vec!["validate", "--counts", c.to_str().unwrap(), "--r-obs", "1/3", "--reps", "30", "--seed", "9", "--k", "4"],
        vec!["select-k", "--counts", c.to_str().unwrap(), "--reps", "10", "--candidates", "2,3"],
        vec!["simulate", "--family", "zipf", "--support", "50", "--n", "40", "--trials", "20", "--t", "2"],
        vec!["sweep", "--counts", c.to_str().unwrap(), "--t-grid", "0.5,1,2"],
    ] {
        let first = run(&args);
        assert!(first.status.success());
        let report = dir.path().join(format!("{}.json", args[0]));
        std::fs::write(&report, &first.stdout).unwrap();
        let again = run(&[args[0], "--config", report.to_str().unwrap()]);
        assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
        assert_eq!(first.stdout, again.stdout, "{}", args[0]);
    }
}

#[test]
fn config_from_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["estimate", "--counts", fixture("counts.csv").to_str().unwrap()]);
    let p = dir.path().join("r.json");
    std::fs::write(&p, r.stdout).unwrap();
    let err = fails_with(&["validate", "--config", p.to_str().unwrap()], 2);
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"input": {{"counts": {:?}}}, "k": 3, "t": 2.0}}"#, fixture("counts.csv").to_str().unwrap()),
    );
    let r = json_ok(&["estimate", "--config", &cfg, "--k", "5"]);
    assert_eq!(r["config"]["k"], 5);
    assert_eq!(r["config"]["t"], 2.0);
}
