//! End-to-end tests of the `szt` binary: documented examples, exit-code
//! conventions, output determinism, and reachability of every module
//! operation from the command table.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_szt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("write fixture");
    path.to_string_lossy().into_owned()
}

#[test]
fn rank_example() {
    let out = run(&["tree", "rank", "--ordinal", "w^(2)"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "w^(2)+1");
}

#[test]
fn szlenk_index_example() {
    let out = run(&["szlenk", "index", "--ordinal", "w", "--epsilon", "1/2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "w+1");
}

#[test]
fn subtree_check_example() {
    let dir = tempfile::tempdir().expect("tempdir");
    let s = write(dir.path(), "s.json", r#"{"parent":[null,0]}"#);
    let t = write(dir.path(), "t.json", r#"{"parent":[null,0,0]}"#);
    let m = write(dir.path(), "m.json", r#"{"0":0,"1":1}"#);
    let out = run(&[
        "factor", "subtree", "--source", &s, "--target", &t, "--map", &m, "--check",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), r#"{"equal":true}"#);
}

#[test]
fn usage_errors_exit_one() {
    // Missing required flag.
    assert_eq!(run(&["tree", "rank"]).status.code(), Some(1));
    // Unknown subcommand.
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    // Malformed ordinal literal.
    assert_eq!(
        run(&["tree", "rank", "--ordinal", "omega^2"]).status.code(),
        Some(1)
    );
    // Unreadable input file.
    assert_eq!(
        run(&["tree", "embed", "--input", "/nonexistent.json", "--ordinal", "w"])
            .status
            .code(),
        Some(1)
    );
    // Unknown check target.
    assert_eq!(run(&["check", "module=nope"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["tree", "--help"]).status.code(), Some(0));
}

#[test]
fn verification_failure_exits_two() {
    let dir = tempfile::tempdir().expect("tempdir");
    // A three-node chain cannot embed identically into a two-level fan.
    let s = write(dir.path(), "s.json", r#"{"parent":[null,0,1]}"#);
    let t = write(dir.path(), "t.json", r#"{"parent":[null,0,0]}"#);
    let out = run(&["factor", "subtree", "--source", &s, "--target", &t, "--check"]);
    assert_eq!(out.status.code(), Some(2));

    // No doubling exponent exists once the leading exponent is exceeded.
    let out = run(&["ordinal", "doubling", "--ordinal", "w^(3)", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn node_budget_is_enforced() {
    let out = bin()
        .env("SZT_MAX_NODES", "4")
        .args(["tree", "truncate", "--ordinal", "w", "--depth", "3", "--width", "3"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structured_output_is_deterministic() {
    for args in [
        vec!["szlenk", "trace", "--ordinal", "w^(2)", "--epsilon", "1/3", "--steps", "3"],
        vec!["tree", "truncate", "--ordinal", "w^(2)", "--depth", "2", "--width", "3"],
        vec!["topology", "compact", "--ordinal", "w"],
        vec!["szlenk", "spoindex", "--ordinal", "w^(2)"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{args:?} failed");
        assert_eq!(a.stdout, b.stdout, "{args:?} not byte-identical");
    }
}

/// Every operation in the command table must be reachable: its leaf
/// subcommand parses and reports its own usage.
#[test]
fn command_table_is_fully_reachable() {
    let table: &[&[&str]] = &[
        &["ordinal", "add"],
        &["ordinal", "mul"],
        &["ordinal", "cmp"],
        &["ordinal", "fundseq"],
        &["ordinal", "alpha"],
        &["ordinal", "doubling"],
        &["tree", "build"],
        &["tree", "rank"],
        &["tree", "derive"],
        &["tree", "embed"],
        &["tree", "enumerate"],
        &["tree", "truncate"],
        &["tree", "dot"],
        &["topology", "cb"],
        &["topology", "compact"],
        &["vec", "sigma"],
        &["vec", "james"],
        &["vec", "chain"],
        &["factor", "witness"],
        &["factor", "build"],
        &["factor", "subtree"],
        &["szlenk", "index"],
        &["szlenk", "trace"],
        &["szlenk", "schedule"],
        &["szlenk", "spoindex"],
        &["fdlab", "lower"],
        &["fdlab", "kk"],
        &["check"],
    ];
    for leaf in table {
        let mut args: Vec<&str> = leaf.to_vec();
        args.push("--help");
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{leaf:?} --help failed");
    }

    // The table above must mention every top-level module exactly once each
    // per operation; cross-check the module list against the root help text.
    let help = stdout(&run(&["--help"]));
    for module in ["ordinal", "tree", "topology", "vec", "factor", "szlenk", "fdlab", "check"] {
        assert!(help.contains(module), "module {module} missing from help");
        assert!(
            table.iter().any(|leaf| leaf[0] == module),
            "module {module} missing from table"
        );
    }
}

#[test]
fn vector_commands_round_trip() {
    let dir = tempfile::tempdir().expect("tempdir");
    let v = write(
        dir.path(),
        "v.json",
        r#"{"entries":[[[3],"1/2"],[[3,0],"1/3"]]}"#,
    );
    let sigma = run(&["vec", "sigma", "--ordinal", "w", "--input", &v]);
    assert!(sigma.status.success());
    assert!(stdout(&sigma).contains("regions"));

    let james = run(&["vec", "james", "--ordinal", "w", "--input", &v]);
    assert!(james.status.success());
    assert!(stdout(&james).contains("squared"));

    let chain = run(&["vec", "chain", "--ordinal", "w", "--input", &v]);
    assert_eq!(chain.status.code(), Some(0));
    assert!(stdout(&chain).contains(r#""holds":true"#));
}

#[test]
fn witness_round_trip_via_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let t = write(dir.path(), "t.json", r#"{"parent":[null,0,0,1]}"#);
    let emit = run(&["factor", "witness", "--tree", &t]);
    assert!(emit.status.success());
    let w = write(dir.path(), "w.json", stdout(&emit).trim());
    let verify = run(&["factor", "witness", "--tree", &t, "--witness", &w]);
    assert_eq!(verify.status.code(), Some(0));
    assert!(stdout(&verify).contains(r#""ok":true"#));

    let build = run(&["factor", "build", "--tree", &t, "--witness", &w]);
    assert!(build.status.success());
    assert!(stdout(&build).contains(r#""u""#) && stdout(&build).contains(r#""v""#));
}

#[test]
fn fdlab_commands_accept_instances() {
    let dir = tempfile::tempdir().expect("tempdir");
    let low = write(
        dir.path(),
        "low.json",
        r#"{"dim":3,"norm":"l2","nu":"1/2","F":[["1/1","0/1","0/1"]],"seed":5}"#,
    );
    let out = run(&["fdlab", "lower", "--input", &low]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(r#""exact_nonneg":true"#));

    let kk = write(
        dir.path(),
        "kk.json",
        r#"{"xstar":["1/1","1/2"],"chain":[[["1/1","0/1"]],[["1/1","0/1"],["0/1","1/1"]]],"c":"3/2","norm":"l2"}"#,
    );
    let out = run(&["fdlab", "kk", "--input", &kk]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(r#""value""#));
}

#[test]
fn check_module_reports_lines() {
    let out = run(&["check", "module=topology", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("PASS ")));
    assert!(text.contains(r#""failed":0"#));
}
