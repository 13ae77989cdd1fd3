//! Lazy walks on the discrete torus, coupled coordinatewise: in a
//! coordinate where the walks differ exactly one of them moves.

use serde_json::json;

use super::{Built, CaseStudyError, Conclusion, Params};
use crate::pwhile::{Domain, DomainDecl};

pub const PROGRAM: &str = "\
var pos, start : vec<int>;
var d, M, i, k, crd : int;
var mov, dir : bool;
var H : list<(bool, bool, int)>;

pos := start; H := []; i := 0;
while i < k do
  mov ~~ {0,1};
  dir ~~ {0,1};
  crd ~~ [1, d];
  if mov then pos := (pos + (dir ? 1 : -1) * u(crd, d)) mod M fi
  H := (mov, dir, crd) :: H;
  i := i + 1;
end
return pos
";

/// A vector literal of length `d`, built from base vectors so that length
/// one needs no special syntax.
fn vector(xs: &[i64]) -> String {
    let d = xs.len();
    let terms: Vec<String> = xs
        .iter()
        .enumerate()
        .map(|(c, x)| format!("{x} * u({}, {d})", c + 1))
        .collect();
    format!("({})", terms.join(" + "))
}

/// `(start + sum_c f(c) * u(c, d)) mod M` on one side.
fn position(start: &str, d: usize, f: impl Fn(usize) -> String) -> String {
    let terms: Vec<String> = (1..=d)
        .map(|c| format!(" + {} * u({c}, d#1)", f(c)))
        .collect();
    format!("({start}{}) mod M#1", terms.concat())
}

pub(super) fn build(p: &Params) -> Result<Built, CaseStudyError> {
    p.check_known(&["d", "modulus", "k", "delta"])?;
    let d = p.int("d", 1, 1, 3)? as usize;
    let m = p.int("modulus", 3, 2, 5)?;
    let k = p.int("k", 2, 1, 4)?;
    let delta = p.ints("delta", &vec![1; d], d, 0, m - 1)?;
    let dv = vector(&delta);
    let frame =
        format!("d#1 = d#2 /\\ M#1 = M#2 /\\ k#1 = k#2 /\\ start#2 = (start#1 + {dv}) mod M#1");
    let pos1 = position("start#1", d, |c| format!("drift1({c}, H#1)"));
    let pos2 = position("start#2", d, |c| format!("drift2({c}, H#1, {dv}, M#1)"));
    let inv =
        format!("{frame} /\\ i#1 = i#2 /\\ i#1 = len(H#1) /\\ pos#1 = {pos1} /\\ pos#2 = {pos2}");
    let guard = format!("{inv} /\\ i#1 < k#1");
    let met = "pos#1[crd#1] = pos#2[crd#1]";
    let after_crd = format!("{guard} /\\ crd#2 = crd#1");
    let after_mov =
        format!("{after_crd} /\\ ({met} ==> mov#2 = mov#1) /\\ (!({met}) ==> mov#2 = !mov#1)");
    let after_dir = format!("{after_mov} /\\ dir#2 = dir#1");
    let phi = format!("(forall c in [1, d#1]. (drift1(c, H#1) - drift2(c, H#1, {dv}, M#1) - {dv}[c]) mod M#1 = 0)");
    let swap = |side: u8, at: usize| json!({"rule": "equiv", "side": side, "transform": {"name": "swap-adjacent"}, "path": [3, 0, at]});
    let body = json!({"rule": "seq", "parts": [
        {"left": 1, "right": 1, "mid": after_crd, "proof": {"rule": "sample"}},
        {"left": 1, "right": 1, "mid": after_mov, "proof": {"rule": "sample", "bij": format!("{met} ? v : !v")}},
        {"left": 1, "right": 1, "mid": after_dir, "proof": {"rule": "sample"}},
        {"proof": {"rule": "assign"}}
    ]});
    let core = json!({"rule": "seq", "parts": [
        {"left": 3, "right": 3, "mid": inv, "proof": {"rule": "assign"}},
        {"proof": {"rule": "while", "inv": inv, "body": body}}
    ]});
    // Bring `crd` to the front of both loop bodies.
    let mut proof = core;
    for (side, at) in [(2, 0), (2, 1), (1, 0), (1, 1)] {
        let mut node = swap(side, at);
        node["proof"] = proof;
        proof = node;
    }
    let script = json!({"pre": frame, "post": format!("{phi} ==> pos#1 = pos#2"), "proof": proof});
    let cell = Domain::Int(0, m - 1);
    let step = Domain::Tuple(vec![Domain::Bool, Domain::Bool, Domain::Int(1, d as i64)]);
    let domains = DomainDecl::new()
        .with("d", Domain::Int(d as i64, d as i64))
        .with("M", Domain::Int(m, m))
        .with("k", Domain::Int(k, k))
        .with("i", Domain::Int(0, k))
        .with("crd", Domain::Int(1, d as i64))
        .with(
            "start",
            Domain::Vec {
                elem: Box::new(cell.clone()),
                len: d,
            },
        )
        .with(
            "pos",
            Domain::Vec {
                elem: Box::new(cell),
                len: d,
            },
        )
        .with(
            "H",
            Domain::List {
                elem: Box::new(step),
                max_len: k as usize,
            },
        );
    let delta_s: Vec<String> = delta.iter().map(i64::to_string).collect();
    Ok(Built {
        name: "torus",
        params: [
            ("d", d.to_string()),
            ("modulus", m.to_string()),
            ("k", k.to_string()),
            ("delta", delta_s.join(",")),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b))
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
