//! Counting heads of two biased coins: the coin with the larger bias
//! dominates. The weaker coin is rewritten as a conjunction of two coins,
//! the first of which matches the stronger one.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde_json::json;

use super::{rat_src, Built, CaseStudyError, Check, Conclusion, Params};
use crate::dist::ratio;
use crate::prhl::{check, ProofScript, Status};
use crate::pwhile::{equivalent_except, Domain, DomainDecl, Equivalence, Memory};

pub const PROGRAM_1: &str = "\
var n, i, k : int;
var q1 : rat;
var x : bool;

n := 0; i := 0;
while i < k do
  x ~~ Bern(q1);
  if x then n := n + 1 fi
  i := i + 1;
end
return n
";

/// `q1` and `r` are parameters the program does not read; the rewrite of
/// its coin refers to them.
pub const PROGRAM_2: &str = "\
var n, i, k : int;
var q1, q2, r : rat;
var x : bool;

n := 0; i := 0;
while i < k do
  x ~~ Bern(q2);
  if x then n := n + 1 fi
  i := i + 1;
end
return n
";

pub const PROGRAM_STAR: &str = "\
var n, i, k : int;
var q1, q2, r : rat;
var x, y, z : bool;

n := 0; i := 0;
while i < k do
  y ~~ Bern(q1);
  z ~~ Bern(r);
  x := y && z;
  if x then n := n + 1 fi
  i := i + 1;
end
return n
";

const PRE: &str = "q1#1 >= q2#2 /\\ r#2 = q2#2 / q1#2 /\\ q1#2 = q1#1 /\\ k#1 = k#2";
const INV: &str = "n#1 >= n#2 /\\ i#1 = i#2 /\\ k#1 = k#2 /\\ q1#1 = q1#2";

/// The proof relating the first program to the split form.
fn star_proof() -> serde_json::Value {
    let guard = format!("{INV} /\\ i#1 < k#1");
    let same = format!("{guard} /\\ x#1 = y#2");
    json!({"rule": "seq", "parts": [
        {"left": 2, "right": 2, "mid": INV, "proof": {"rule": "assign"}},
        {"proof": {"rule": "while", "inv": INV, "body": {"rule": "seq", "parts": [
            {"left": 1, "right": 1, "mid": same, "proof": {"rule": "sample"}},
            {"left": 0, "right": 1, "mid": same, "proof": {"rule": "sample-r"}},
            {"proof": {"rule": "assign"}}
        ]}}}
    ]})
}

pub(super) fn build(p: &Params) -> Result<Built, CaseStudyError> {
    p.check_known(&["k", "q1", "q2", "r"])?;
    let k = p.int("k", 3, 1, 8)?;
    let q1 = p.prob("q1", ratio(7, 10))?;
    let q2 = p.prob("q2", ratio(2, 5))?;
    if q1 < q2 {
        return Err(super::param_err("q2", "must not exceed q1"));
    }
    if q1 == BigRational::from_integer(0.into()) {
        return Err(super::param_err("q1", "must be positive"));
    }
    let r = &q2 / &q1;
    let given_r = p.prob("r", r.clone())?;
    if given_r != r {
        return Err(super::param_err(
            "r",
            format!("must equal q2/q1 = {}", rat_src(&r)),
        ));
    }
    let mut proof = json!({"rule": "equiv", "side": 2, "path": [2, 0, 0],
        "transform": {"name": "coin-split", "p1": "q1#2", "p2": "r#2", "fresh": ["y", "z"]}});
    proof["proof"] = star_proof();
    let script = json!({"pre": PRE, "post": "n#1 >= n#2", "proof": proof});
    let rats = |v: &BigRational| Domain::Values(vec![crate::dist::Value::Rat(v.clone())]);
    let domains = DomainDecl::new()
        .with("k", Domain::Int(k, k))
        .with("n", Domain::Int(0, k))
        .with("i", Domain::Int(0, k))
        .with("q1", rats(&q1))
        .with("q2", rats(&q2))
        .with("r", rats(&r));
    Ok(Built {
        name: "biased-coins",
        params: [
            ("k", k.to_string()),
            ("q1", rat_src(&q1)),
            ("q2", rat_src(&q2)),
            ("r", rat_src(&r)),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b))
        .collect(),
        programs: vec![
            ("program1.pwhile".into(), PROGRAM_1.into()),
            ("program2.pwhile".into(), PROGRAM_2.into()),
            ("program-star.pwhile".into(), PROGRAM_STAR.into()),
        ],
        domains,
        script,
        fuel: k as usize + 1,
        conclusion: Conclusion::Sd,
    })
}

/// The two halves of the composed proof, each checked on its own: the
/// coupling with the split program and the equivalence of the split
/// program with the second one.
pub(super) fn side_checks(b: &Built) -> Result<Vec<Check>, CaseStudyError> {
    let (c1, c2, star) = (b.program(0)?, b.program(1)?, b.program(2)?);
    let script =
        ProofScript::from_json(&json!({"pre": PRE, "post": "n#1 >= n#2", "proof": star_proof()}))?;
    let j = crate::prhl::Judgment::new(c1, star.clone(), script.pre.clone(), script.post.clone());
    let verdict = check(&j, &script.proof, &b.domains, b.fuel);
    let direct = Check::new(
        "first program coupled with the split program",
        verdict.status() == Status::Accepted,
        format!(
            "{} obligations, {}",
            verdict.obligations.len(),
            verdict.status().as_str()
        ),
    );
    let inputs: Vec<String> = ["k", "q1", "q2", "r"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mems: Vec<Memory> = b.domains.memories(None, &inputs)?;
    let hidden: BTreeSet<String> = ["y".to_string(), "z".to_string()].into();
    let eq = equivalent_except(&star.body, &c2.body, &mems, &hidden, b.fuel);
    let equiv = Check::new(
        "split program equivalent to the second program",
        matches!(eq, Ok(ref e) if e.holds()),
        match eq {
            Ok(Equivalence::Equal) => format!("equal from {} memories", mems.len()),
            Ok(Equivalence::Differs { memory, .. }) => format!("differs from {memory:?}"),
            Ok(Equivalence::Indeterminate { memory }) => format!("out of fuel from {memory:?}"),
            Err(e) => e.to_string(),
        },
    );
    Ok(vec![direct, equiv])
}
