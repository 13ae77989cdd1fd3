//! Two symmetric walks on the integers started an even distance apart,
//! coupled by mirroring until they meet.

use serde_json::json;

use super::{Built, CaseStudyError, Check, Conclusion, Params};
use crate::dist::Value;
use crate::prhl::{validate_with, Judgment};
use crate::pwhile::{Domain, DomainDecl, Side};

pub const PROGRAM: &str = "\
var pos, start, i, k : int;
var H : list<bool>;
var b : bool;

pos := start; H := []; i := 0;
while i < k do
  b ~~ {0,1};
  H := b :: H;
  if b then pos++ else pos-- fi
  i := i + 1;
end
return pos
";

pub(super) fn build(p: &Params) -> Result<Built, CaseStudyError> {
    p.check_known(&["k", "n", "start1", "start2"])?;
    let k = p.int("k", 2, 1, 6)?;
    let n = p.int("n", 1, 1, 4)?;
    let start1 = p.int("start1", 0, -8, 8)?;
    let start2 = p.int("start2", start1 + 2 * n, -8, 16)?;
    if start2 != start1 + 2 * n {
        return Err(super::param_err(
            "start2",
            format!("must equal start1 + 2n = {}", start1 + 2 * n),
        ));
    }
    let frame = format!("k#1 = k#2 /\\ start#1 + 2 * {n} = start#2");
    let inv = format!(
        "{frame} /\\ i#1 = i#2 /\\ i#1 = len(H#1) /\\ pos#1 = start#1 + sigma(H#1) \
         /\\ (reached(H#1, {n}) ==> pos#2 = pos#1) /\\ (!reached(H#1, {n}) ==> pos#2 = start#2 - sigma(H#1))"
    );
    let coupled = format!(
        "{inv} /\\ i#1 < k#1 /\\ (reached(H#1, {n}) ==> b#2 = b#1) /\\ (!reached(H#1, {n}) ==> b#2 = !b#1)"
    );
    let script = json!({
        "pre": frame,
        "post": format!("reached(H#1, {n}) ==> pos#1 = pos#2"),
        "proof": {"rule": "seq", "parts": [
            {"left": 3, "right": 3, "mid": inv, "proof": {"rule": "assign"}},
            {"proof": {"rule": "while", "inv": inv, "body": {"rule": "seq", "parts": [
                {"left": 1, "right": 1, "mid": coupled,
                 "proof": {"rule": "sample", "var": "v", "bij": format!("reached(H#1, {n}) ? v : !v")}},
                {"proof": {"rule": "assign"}}
            ]}}}
        ]}
    });
    let lo = start1.min(start2) - k;
    let hi = start1.max(start2) + k;
    let domains = DomainDecl::new()
        .with_side(Side::Left, "start", Domain::Int(start1, start1))
        .with_side(Side::Right, "start", Domain::Int(start2, start2))
        .with("k", Domain::Int(k, k))
        .with("i", Domain::Int(0, k))
        .with("pos", Domain::Int(lo, hi))
        .with(
            "H",
            Domain::List {
                elem: Box::new(Domain::Bool),
                max_len: k as usize,
            },
        );
    Ok(Built {
        name: "random-walk",
        params: [("k", k), ("n", n), ("start1", start1), ("start2", start2)]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        programs: vec![
            ("program.pwhile".into(), PROGRAM.into()),
            ("program.pwhile".into(), PROGRAM.into()),
        ],
        domains,
        script,
        fuel: k as usize + 1,
        conclusion: Conclusion::Tv,
    })
}

/// In every witness coupling the two final positions keep the parity of
/// the initial offset.
pub(super) fn side_checks(b: &Built, j: &Judgment) -> Result<Vec<Check>, CaseStudyError> {
    let mut all = true;
    let mut seen = 0;
    validate_with(j, &b.domains, b.fuel, |w| {
        let offset = |m: &crate::pwhile::Memory| m.get("start").and_then(Value::as_i64);
        let start_gap = offset(w.left).zip(offset(w.right)).map(|(a, c)| a - c);
        for ((m1, m2), _) in w.coupling.joint().iter() {
            seen += 1;
            let p1 = m1.get("pos").and_then(Value::as_i64);
            let p2 = m2.get("pos").and_then(Value::as_i64);
            let ok = match (p1, p2, start_gap) {
                (Some(a), Some(c), Some(g)) => (a - c - g).rem_euclid(2) == 0,
                _ => false,
            };
            all &= ok;
        }
    });
    Ok(vec![Check::new(
        "witness couplings preserve parity",
        all && seen > 0,
        format!("{seen} support pairs"),
    )])
}
