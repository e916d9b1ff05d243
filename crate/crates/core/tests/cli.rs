use std::path::Path;
use std::process::Command;

use serde_json::Value;
use steiner_core::cli::{run_with, Certificate, EXIT_CHECK_FAILED, EXIT_LIMIT, EXIT_OK, EXIT_USAGE};
use steiner_core::designs::affine_design;
use steiner_core::eigenfunctions::Eigenfunction;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("steiner").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn cert(args: &[&str]) -> (i32, Certificate) {
    let (code, out, err) = run(args);
    let c = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
    (code, c)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn blockgraph_certificate_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let (code, c) = cert(&["blockgraph", "--space", "aff", "--n", "3", "--q", "2", "--out", p(&out)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.schema_version, "sv1");
    assert_eq!(c.result["v"], 28);
    assert_eq!(c.result["k"], 12);
    assert_eq!(c.result["srg"], serde_json::json!([28, 12, 6, 4]));
    // vertices are rendered as canonical lines, not indices
    assert!(c.result["vertices"][0]["dir"].is_array());
    let on_disk: Certificate = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(on_disk.result, c.result);
    assert!(c.checks.iter().all(|k| k.passed));
}

#[test]
fn certificates_are_byte_deterministic() {
    for args in [
        &["enumerate-affine-reguli", "--n", "3", "--q", "2", "--no-timing"][..],
        &["wdbplus2", "--q", "2", "--no-timing"],
        &["enumerate-optimal", "--space", "aff", "--q", "2", "--no-timing"],
    ] {
        let (c1, a, _) = run(args);
        let (c2, b, _) = run(args);
        assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn enumerate_affine_reguli_reports_conventions() {
    let (code, c) = cert(&["enumerate-affine-reguli", "--n", "3", "--q", "2", "--summary"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["count"], 336);
    assert_eq!(c.result["counts"]["families"], 168);
    assert_eq!(c.result["counts"]["quadrics"], 168);
    assert!(c.result["convention"]["ordered_pairs"].is_string());
}

#[test]
fn cache_round_trip_and_tamper_detection() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["blockgraph", "--space", "aff", "--q", "3", "--summary", "--cache", p(dir.path())];
    let (code, first) = cert(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(first.result["cache"]["status"], "written");
    let (code, second) = cert(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(second.result["cache"]["status"], "hit");
    assert_eq!(second.result["digest"], first.result["digest"]);
    assert!(second.checks.iter().any(|k| k.name == "cache-matches-fresh-build" && k.passed));

    let file = dir.path().join("blockgraph-aff-n3-q3.json");
    let mut body: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let adj = body["adjacency"].as_str().unwrap().to_string();
    let flipped = if adj.starts_with('0') { format!("1{}", &adj[1..]) } else { format!("0{}", &adj[1..]) };
    body["adjacency"] = Value::String(flipped);
    std::fs::write(&file, body.to_string()).unwrap();
    let (code, third) = cert(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(third.result["cache"]["status"], "written");
}

#[test]
fn cache_environment_variable_overrides_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_steiner"))
        .args(["srg", "--space", "aff", "--q", "2", "--cache", p(flag_dir.path())])
        .env("STEINER_CACHE", env_dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.path().join("blockgraph-aff-n3-q2.json").exists());
    assert!(!flag_dir.path().join("blockgraph-aff-n3-q2.json").exists());
    // progress goes to stderr, the certificate to stdout
    let c: Certificate = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c.command, "srg");
    assert!(String::from_utf8_lossy(&out.stderr).contains("srg (28,12,6,4)"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(run(&["srg", "--q", "6"]).0, EXIT_USAGE);
    assert_eq!(run(&["regulus", "--line", "1,0,0,0:0,1,0,0"]).0, EXIT_USAGE);
    assert_eq!(run(&["balance", "--space", "aff"]).0, EXIT_USAGE);
    let out = Command::new(env!("CARGO_BIN_EXE_steiner")).arg("--bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(out.stdout.is_empty());
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f.json");
    let bad = Eigenfunction::from_ints(28, -2, &[(0, 1), (1, -1)]).unwrap();
    std::fs::write(&file, serde_json::to_string(&bad).unwrap()).unwrap();
    let (code, c) = cert(&["verify-eigenfunction", "--space", "aff", "--input", p(&file)]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert_eq!(c.result["valid"], false);
    let eq = c.checks.iter().find(|k| k.name == "eigen-equation-at-every-vertex").unwrap();
    assert!(!eq.passed && !eq.witness.is_null());

    let (code, c) = cert(&["equitable", "--part", "0,1,2"]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(c.checks[0].witness["u"].is_number());
}

#[test]
fn verify_eigenfunction_accepts_optimal_function() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f.json");
    let d = affine_design(3, 2).unwrap();
    let bg = steiner_core::designs::block_graph(d);
    let (t0, t1) = steiner_core::eigenfunctions::enumerate_complete_bipartite(&bg.graph, 2).unwrap()[0].clone();
    let f = steiner_core::eigenfunctions::from_bipartite_pair(&bg.graph, &t0, &t1, -2).unwrap();
    std::fs::write(&file, serde_json::to_string(&f).unwrap()).unwrap();
    let (code, c) = cert(&["verify-eigenfunction", "--space", "aff", "--input", p(&file)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["optimal"], true);
    assert_eq!(c.result["support_size"], 4);
    assert!(c.result["class"] == "type1" || c.result["class"] == "type2");
}

#[test]
fn search_limit_checkpoint_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    let base = ["search-support", "--space", "aff", "--q", "2", "--theta", "-2", "--size", "6", "--summary"];
    let (code, full) = cert(&[&base[..], &["--no-timing"]].concat());
    assert_eq!(code, EXIT_OK);

    let limited = [&base[..], &["--limit", "5000", "--checkpoint", p(&cp)]].concat();
    let (code, out, err) = run(&limited);
    assert_eq!(code, EXIT_LIMIT, "{err}");
    assert!(out.is_empty());
    assert!(cp.exists());

    let resumed = [&base[..], &["--resume", p(&cp), "--no-timing"]].concat();
    let (code, c) = cert(&resumed);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["function_count"], full.result["function_count"]);
    assert_eq!(c.result["structure_census"], full.result["structure_census"]);
    assert_eq!(c.result["examined"], full.result["examined"]);
}

#[test]
fn text_format_is_a_summary() {
    let (code, out, _) = run(&["wdb", "--q", "2", "--format", "text"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("wdb ["));
    assert!(out.contains("[pass] wdb-closed-form-theta--3"));
    assert!(serde_json::from_str::<Value>(&out).is_err());
}

#[test]
fn regulus_and_affine_regulus_commands() {
    let (code, c) = cert(&[
        "regulus",
        "--line",
        "1,0,0,0:0,1,0,0",
        "--line",
        "0,0,1,0:0,0,0,1",
        "--line",
        "1,0,1,0:0,1,0,1",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["regulus"].as_array().unwrap().len(), 3);
    assert_eq!(c.result["grid_points"].as_array().unwrap().len(), 9);

    let (code, c) = cert(&["affine-regulus", "--space", "aff", "--q", "3", "--v1", "1,0,0", "--v2", "0,1,0", "--v3", "0,0,1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["s"].as_array().unwrap().len(), 3);

    let (code, _, _) = run(&["affine-regulus", "--space", "aff", "--v1", "1,0,0", "--v2", "1,0,0", "--v3", "0,0,1"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn cameron_liebler_and_balance_commands() {
    let (code, c) = cert(&["cameron-liebler", "--hyperplane", "0,0,0,1", "--complement", "--random", "20"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["set"]["size"], 28);
    assert_eq!(c.result["set"]["cameron_liebler"], true);
    let (code, c) = cert(&["balance", "--limit", "40"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(c.result["checks_run"], 40 * 30);
}
