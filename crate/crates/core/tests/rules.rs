use prhl_core::dist::Value;
use prhl_core::prhl::{
    check, check_proof, validate_semantics, Judgment, ObligationResult, ProofScript, Status,
    Validity,
};
use prhl_core::pwhile::{parse_program, Domain, DomainDecl};
use serde_json::json;

const FUEL: usize = 64;

fn judgment(left: &str, right: &str, script: &serde_json::Value) -> (Judgment, ProofScript) {
    let s = ProofScript::from_json(script).unwrap();
    let j = Judgment::from_script(
        parse_program(left).unwrap(),
        parse_program(right).unwrap(),
        &s,
    );
    (j, s)
}

fn small_ints() -> DomainDecl {
    DomainDecl::new()
        .with("x", Domain::Int(0, 3))
        .with("i", Domain::Int(0, 3))
        .with("n", Domain::Int(0, 3))
}

const COIN: &str = "var x : bool; x ~~ Bern(1/3)";

#[test]
fn identity_coupling_of_coins() {
    let (j, s) = judgment(
        COIN,
        COIN,
        &json!({"pre": "true", "post": "x#1 = x#2", "proof": {"rule": "sample"}}),
    );
    let v = check_proof(&j, &s.proof, &DomainDecl::new(), FUEL).unwrap();
    assert_eq!(v.verdict().obligations.len(), 1);
    assert!(validate_semantics(&j, &DomainDecl::new(), FUEL).is_valid());
}

#[test]
fn negation_needs_a_fair_coin() {
    let script =
        json!({"pre": "true", "post": "x#1 != x#2", "proof": {"rule": "sample", "bij": "!v"}});
    let (j, s) = judgment(COIN, COIN, &script);
    let verdict = check(&j, &s.proof, &DomainDecl::new(), FUEL);
    assert_eq!(verdict.status(), Status::Rejected);
    let ObligationResult::Failed {
        counterexample: Some(cx),
        ..
    } = &verdict.obligations[0].result
    else {
        panic!("expected a counterexample: {verdict:?}");
    };
    assert!(cx.sample.is_some());
    assert!(!validate_semantics(&j, &DomainDecl::new(), FUEL).is_valid());

    let fair = "var x : bool; x ~~ Bern(1/2)";
    let (j, s) = judgment(fair, fair, &script);
    assert_eq!(
        check(&j, &s.proof, &DomainDecl::new(), FUEL).status(),
        Status::Accepted
    );
}

#[test]
fn assignment_and_counter_loop() {
    let prog = "var i, n : int; i := 0; while i < n do i := i + 1 end";
    let inv = "n#1 = n#2 /\\ i#1 = i#2";
    let script = json!({
        "pre": "n#1 = n#2",
        "post": "i#1 = i#2",
        "proof": {"rule": "seq", "parts": [
            {"left": 1, "right": 1, "mid": inv, "proof": {"rule": "assign"}},
            {"proof": {"rule": "while", "inv": inv, "body": {"rule": "assign"}}}
        ]}
    });
    let (j, s) = judgment(prog, prog, &script);
    let verdict = check(&j, &s.proof, &small_ints(), FUEL);
    assert_eq!(
        verdict.status(),
        Status::Accepted,
        "{:#}",
        verdict.to_json()
    );
    assert_eq!(verdict.to_json()["schema"], "prhl-verdict/1");
    assert!(validate_semantics(&j, &small_ints(), FUEL).is_valid());
}

#[test]
fn wrong_invariant_is_rejected_with_a_pair() {
    let prog = "var i, n : int; while i < n do i := i + 1 end";
    let script = json!({
        "pre": "n#1 = n#2",
        "post": "i#1 = i#2",
        "proof": {"rule": "while", "inv": "n#1 = n#2", "body": {"rule": "assign"}}
    });
    let (j, s) = judgment(prog, prog, &script);
    let verdict = check(&j, &s.proof, &small_ints(), FUEL);
    assert_eq!(verdict.status(), Status::Rejected);
    let failed: Vec<_> = verdict.failures().collect();
    assert!(failed.iter().any(|o| o.what.contains("guards")));
    assert!(matches!(
        validate_semantics(&j, &small_ints(), FUEL),
        Validity::Invalid { .. }
    ));
}

#[test]
fn one_sided_rules_and_losslessness() {
    let left = "var i, n : int; while i < n do i := i + 1 end";
    let script = json!({
        "pre": "i#1 = 0 /\\ n#1 = 2",
        "post": "i#1 = 2",
        "proof": {"rule": "while-l", "inv": "i#1 <= 2 /\\ n#1 = 2", "body": {"rule": "assign-l"}}
    });
    let (j, s) = judgment(left, "skip", &script);
    let verdict = check(&j, &s.proof, &small_ints(), FUEL);
    assert_eq!(
        verdict.status(),
        Status::Accepted,
        "{:#}",
        verdict.to_json()
    );

    let stuck = "var i, n : int; while i < n do skip end";
    let (j, s) = judgment(stuck, "skip", &script);
    let mut s = s;
    if let prhl_core::prhl::ProofNode::WhileSide { body, .. } = &mut s.proof {
        **body = prhl_core::prhl::ProofNode::Skip;
    }
    let verdict = check(&j, &s.proof, &small_ints(), 8);
    assert_eq!(
        verdict.status(),
        Status::Indeterminate,
        "{:#}",
        verdict.to_json()
    );
}

#[test]
fn conditionals_and_cases() {
    let prog = "var x, y : int; if x > 1 then y := 1 else y := 0 fi";
    let script = json!({
        "pre": "x#1 = x#2",
        "post": "y#1 = y#2",
        "proof": {"rule": "if", "then": {"rule": "assign"}, "else": {"rule": "assign"}}
    });
    let (j, s) = judgment(prog, prog, &script);
    assert_eq!(
        check(&j, &s.proof, &small_ints(), FUEL).status(),
        Status::Accepted
    );

    let by_cases = json!({
        "pre": "x#1 = x#2",
        "post": "y#1 = y#2",
        "proof": {"rule": "case", "split": "x#1 > 1",
            "yes": {"rule": "if-l", "then": {"rule": "if-r", "then": {"rule": "assign"}, "else": {"rule": "assign"}},
                    "else": {"rule": "if-r", "then": {"rule": "assign"}, "else": {"rule": "assign"}}},
            "no": {"rule": "assign"}}
    });
    let (j, s) = judgment(prog, prog, &by_cases);
    let verdict = check(&j, &s.proof, &small_ints(), FUEL);
    assert_eq!(
        verdict.status(),
        Status::Accepted,
        "{:#}",
        verdict.to_json()
    );
}

#[test]
fn equiv_rewrites_are_checked() {
    let left = "var x : bool; x ~~ Bern(1/4)";
    let right = "var x, y, z : bool; y ~~ Bern(1/2); z ~~ Bern(1/2); x := y && z";
    let script = json!({
        "pre": "true",
        "post": "x#1 = x#2",
        "proof": {"rule": "equiv", "side": 1, "path": [0],
            "transform": {"name": "coin-split", "p1": "1/2", "p2": "1/2", "fresh": ["y", "z"]},
            "proof": {"rule": "seq", "parts": [
                {"left": 1, "right": 1, "mid": "y#1 = y#2", "proof": {"rule": "sample"}},
                {"left": 1, "right": 1, "mid": "y#1 = y#2 /\\ z#1 = z#2", "proof": {"rule": "sample"}},
                {"proof": {"rule": "assign"}}
            ]}}
    });
    let (j, s) = judgment(left, right, &script);
    let verdict = check(&j, &s.proof, &DomainDecl::new(), FUEL);
    assert_eq!(
        verdict.status(),
        Status::Accepted,
        "{:#}",
        verdict.to_json()
    );
    assert!(validate_semantics(&j, &DomainDecl::new(), FUEL).is_valid());

    let wrong = json!({
        "pre": "true", "post": "x#1 = x#2",
        "proof": {"rule": "equiv", "side": 1, "path": [0],
            "transform": {"name": "coin-split", "p1": "1/2", "p2": "1/3"},
            "proof": {"rule": "skip"}}
    });
    let (j, s) = judgment(left, right, &wrong);
    let verdict = check(&j, &s.proof, &DomainDecl::new(), FUEL);
    assert!(verdict
        .obligations
        .iter()
        .any(|o| o.what.contains("semantics") && !o.passed()));
}

#[test]
fn seq_counts_must_fit() {
    let prog = "var x : int; x := 1; x := 2";
    let script = json!({"pre": "true", "post": "x#1 = x#2",
        "proof": {"rule": "seq", "parts": [{"left": 3, "right": 1, "mid": "true", "proof": {"rule": "assign"}},
                                            {"proof": {"rule": "assign"}}]}});
    let (j, s) = judgment(prog, prog, &script);
    let verdict = check(&j, &s.proof, &small_ints(), FUEL);
    assert_eq!(verdict.status(), Status::Rejected);
    assert!(verdict.obligations[0].what.contains("rule applies"));
}

#[test]
fn validation_reports_missing_domains() {
    let prog = "var x, y : int; y := x";
    let (j, _) = judgment(
        prog,
        prog,
        &json!({"pre": "x#1 = x#2", "post": "y#1 = y#2", "proof": {"rule": "assign"}}),
    );
    assert!(matches!(
        validate_semantics(&j, &DomainDecl::new(), FUEL),
        Validity::Indeterminate { .. }
    ));
    let dom = DomainDecl::new().with("x", Domain::Values(vec![Value::int(7), Value::int(-1)]));
    assert_eq!(
        validate_semantics(&j, &dom, FUEL),
        Validity::Valid { pairs: 2 }
    );
}
