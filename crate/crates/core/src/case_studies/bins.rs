//! Throwing balls into two bins: more balls fill both bins at least as
//! much. The longer loop is split so that its first part runs in lockstep
//! with the shorter one.

use serde_json::json;

use super::{Built, CaseStudyError, Check, Conclusion, Params};
use crate::pwhile::{parse_relational, rewrite, Domain, DomainDecl, Side, Transform};

/// `m` is the ball count of the other process; only the proof reads it.
pub const PROGRAM_1: &str = "\
var binA, binB, i, n, m : int;
var b : bool;

binA := 0; binB := 0; i := 0;
while i < n do
  b ~~ {0,1};
  if b then binA++ else binB++ fi
  i := i + 1;
end
return (binA, binB)
";

pub const PROGRAM_2: &str = "\
var binA, binB, i, n : int;
var b : bool;

binA := 0; binB := 0; i := 0;
while i < n do
  b ~~ {0,1};
  if b then binA++ else binB++ fi
  i := i + 1;
end
return (binA, binB)
";

/// The first program after splitting its loop at `m` throws.
pub const PROGRAM_SPLIT: &str = "\
var binA, binB, i, n, m : int;
var b : bool;

binA := 0; binB := 0; i := 0;
while i < n && i < m do
  b ~~ {0,1};
  if b then binA++ else binB++ fi
  i := i + 1;
end
while i < n do
  b ~~ {0,1};
  if b then binA++ else binB++ fi
  i := i + 1;
end
return (binA, binB)
";

const SPLIT_AT: &str = "i#1 < m#1";

pub(super) fn build(p: &Params) -> Result<Built, CaseStudyError> {
    p.check_known(&["n1", "n2"])?;
    let n1 = p.int("n1", 3, 0, 6)?;
    let n2 = p.int("n2", 2, 0, 6)?;
    if n2 > n1 {
        return Err(super::param_err("n2", "must not exceed n1"));
    }
    let frame = "n#1 >= n#2 /\\ m#1 = n#2";
    let same = format!("{frame} /\\ i#1 = i#2 /\\ binA#1 = binA#2 /\\ binB#1 = binB#2");
    let lockstep = format!("{same} /\\ i#1 <= m#1");
    let phi = "binA#1 >= binA#2 /\\ binB#1 >= binB#2";
    let rest = format!("{phi} /\\ n#1 >= n#2");
    let script = json!({
        "pre": frame,
        "post": phi,
        "proof": {"rule": "equiv", "side": 1, "path": [3],
            "transform": {"name": "loop-split", "cond": SPLIT_AT},
            "proof": {"rule": "seq", "parts": [
                {"left": 3, "right": 3, "mid": lockstep, "proof": {"rule": "assign"}},
                {"left": 1, "right": 1, "mid": rest, "proof": {"rule": "while", "inv": lockstep, "body": {"rule": "seq", "parts": [
                    {"left": 1, "right": 1, "mid": format!("{lockstep} /\\ i#1 < m#1 /\\ b#1 = b#2"), "proof": {"rule": "sample"}},
                    {"proof": {"rule": "assign"}}
                ]}}},
                {"proof": {"rule": "while-l", "inv": rest, "body": {"rule": "seq", "parts": [
                    {"left": 1, "right": 0, "mid": format!("{rest} /\\ i#1 < n#1"), "proof": {"rule": "sample-l"}},
                    {"proof": {"rule": "assign-l"}}
                ]}}}
            ]}
        }
    });
    let domains = DomainDecl::new()
        .with_side(Side::Left, "n", Domain::Int(n1, n1))
        .with_side(Side::Right, "n", Domain::Int(n2, n2))
        .with("m", Domain::Int(0, n1))
        .with("i", Domain::Int(0, n1))
        .with("binA", Domain::Int(0, n1))
        .with("binB", Domain::Int(0, n1));
    Ok(Built {
        name: "bins",
        params: [("n1", n1), ("n2", n2)]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        programs: vec![
            ("program1.pwhile".into(), PROGRAM_1.into()),
            ("program2.pwhile".into(), PROGRAM_2.into()),
            ("program1-split.pwhile".into(), PROGRAM_SPLIT.into()),
        ],
        domains,
        script,
        fuel: n1 as usize + 1,
        conclusion: Conclusion::Sd,
    })
}

/// The loop split, applied to the first program, yields exactly the
/// shipped split program.
pub(super) fn side_checks(b: &Built) -> Result<Vec<Check>, CaseStudyError> {
    let p1 = b.program(0)?;
    let split = b.program(2)?;
    let cond = parse_relational(SPLIT_AT, &[])
        .expect("fixed condition parses")
        .untag(Side::Left);
    let outcome = cond.map_err(|e| e.to_string()).and_then(|cond| {
        rewrite(&p1.body, &p1.decls, &Transform::LoopSplit { cond }, &[3])
            .map_err(|e| e.to_string())
    });
    let check = match outcome {
        Ok(rw) => {
            let same = rw.command == split.body;
            Check::new(
                "loop split matches the split program",
                same,
                if same { "identical" } else { "differs" },
            )
        }
        Err(e) => Check::new("loop split matches the split program", false, e),
    };
    Ok(vec![check])
}
