use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value as Json;

fn prhl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prhl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn study(name: &str, file: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/case-studies")
        .join(name)
        .join(file);
    p.to_str().unwrap().to_string()
}

fn scratch(name: &str, content: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, content).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Json {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn random_walk_csv_row() {
    let o = prhl(&[
        "case-study",
        "random-walk",
        "--param",
        "k=2",
        "--param",
        "n=1",
        "--format",
        "csv",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("left,right,tv,bound,verdict"));
    let row = lines.next().unwrap();
    assert!(row.ends_with(",1/2,1/2,ok"), "{row}");
    assert_eq!(lines.next(), None);
}

#[test]
fn interpret_walk_gives_three_points() {
    let prog = study("random-walk", "program.pwhile");
    let o = prhl(&["interpret", &prog, "--memory", r#"{"start": 0, "k": 2}"#]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let j = stdout_json(&o);
    assert_eq!(j["schema"], "prhl-output/1");
    assert_eq!(
        j["output"],
        serde_json::json!({"entries": [[-2, "1/4"], [0, "1/2"], [2, "1/4"]]})
    );
}

#[test]
fn swapped_bijection_fails_with_a_counterexample() {
    let coin = scratch("coin.pwhile", "var x : bool;\nx ~~ Bern(1/3)\n");
    let proof = scratch(
        "bad.json",
        r#"{"schema": "prhl-proof/1", "pre": "true", "post": "x#1 != x#2", "proof": {"rule": "sample", "bij": "!v"}}"#,
    );
    let o = prhl(&["check", &coin, &coin, "--proof", &proof]);
    assert_eq!(o.status.code(), Some(1));
    let j = stdout_json(&o);
    assert_eq!(j["status"], "rejected");
    let failed = &j["obligations"][0];
    assert_eq!(failed["result"], "failed");
    assert!(failed["counterexample"].is_object(), "{failed}");
    let err: Json = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "failed");
}

#[test]
fn shipped_bins_check_and_validate() {
    let (p1, p2) = (
        study("bins", "program1.pwhile"),
        study("bins", "program2.pwhile"),
    );
    let (proof, doms) = (study("bins", "proof.json"), study("bins", "domains.json"));
    for cmd in ["check", "validate", "sd-report"] {
        let o = prhl(&[
            cmd,
            &p1,
            &p2,
            "--proof",
            &proof,
            "--domains",
            &doms,
            "--fuel",
            "8",
            "--format",
            "human",
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
    }
}

#[test]
fn tiny_cap_is_indeterminate() {
    let (p1, p2) = (
        study("bins", "program1.pwhile"),
        study("bins", "program2.pwhile"),
    );
    let (proof, doms) = (study("bins", "proof.json"), study("bins", "domains.json"));
    let o = prhl(&[
        "check",
        &p1,
        &p2,
        "--proof",
        &proof,
        "--domains",
        &doms,
        "--cap",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    assert_eq!(stdout_json(&o)["status"], "indeterminate");
}

#[test]
fn usage_errors_exit_two_with_a_diagnostic() {
    let o = prhl(&["interpret", "/nonexistent/walk.pwhile"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Json = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");
    assert!(o.stdout.is_empty());

    let o = prhl(&["case-study", "torus", "--param", "modulus=99"]);
    assert_eq!(o.status.code(), Some(2));

    let o = prhl(&["case-study", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["case-study", "birth-death", "--format", "json"];
    let (a, b) = (prhl(&args), prhl(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
