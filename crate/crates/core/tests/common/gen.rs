//! Random small program pairs with well-formed proof scripts. The scripts
//! follow the program structure but their assertions and bijections are
//! drawn at random, so some are accepted and many are not.

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value as Json};

use prhl_core::pwhile::{Domain, DomainDecl};

pub const DECLS: &str = "var x, y, i : int;\nvar b : bool;\n";

const ASSIGNS: [&str; 6] = [
    "x := (x + y) mod 3",
    "y := 2",
    "x := y",
    "b := x = y",
    "y := (y + 1) mod 3",
    "b := !b",
];
const PROBS: [&str; 3] = ["1/4", "1/2", "3/4"];
const ATOMS: [&str; 7] = [
    "x#1 = x#2",
    "y#1 = y#2",
    "b#1 = b#2",
    "x#1 >= x#2",
    "y#1 <= y#2",
    "b#1 ==> b#2",
    "x#1 != y#2",
];
const FULL: &str = "x#1 = x#2 /\\ y#1 = y#2 /\\ b#1 = b#2";

/// One top-level item: its source on each side, its statement count and
/// the proof that relates the two.
struct Item {
    left: String,
    right: String,
    len: usize,
    proof: Json,
}

pub struct Case {
    pub left: String,
    pub right: String,
    pub script: Json,
}

pub fn domains() -> DomainDecl {
    DomainDecl::new()
        .with("x", Domain::Int(0, 2))
        .with("y", Domain::Int(0, 2))
        .with("i", Domain::Int(0, 2))
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty choices")
}

/// The right-hand copy of a choice, occasionally replaced.
fn perturb<'a, R: Rng>(rng: &mut R, same: &'a str, xs: &[&'a str]) -> &'a str {
    if rng.gen_bool(0.2) {
        pick(rng, xs)
    } else {
        same
    }
}

fn assertion<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        return FULL.to_string();
    }
    let n = rng.gen_range(0..=3);
    let atoms: Vec<&str> = ATOMS.choose_multiple(rng, n).copied().collect();
    if atoms.is_empty() {
        "true".to_string()
    } else {
        atoms.join(" /\\ ")
    }
}

fn assign<R: Rng>(rng: &mut R) -> Item {
    let a = pick(rng, &ASSIGNS);
    Item {
        left: a.into(),
        right: perturb(rng, a, &ASSIGNS).into(),
        len: 1,
        proof: json!({"rule": "assign"}),
    }
}

fn sample<R: Rng>(rng: &mut R) -> Item {
    if rng.gen_bool(0.5) {
        let bij = pick(rng, &["v", "(v + 1) mod 3", "2 - v"]);
        let lo = pick(rng, &["0", "0", "1"]);
        Item {
            left: "x ~~ [0, 2]".into(),
            right: format!("x ~~ [{lo}, 2]"),
            len: 1,
            proof: json!({"rule": "sample", "bij": bij}),
        }
    } else {
        let p = pick(rng, &PROBS);
        let bij = pick(rng, &["v", "v", "!v"]);
        Item {
            left: format!("b ~~ Bern({p})"),
            right: format!("b ~~ Bern({})", perturb(rng, p, &PROBS)),
            len: 1,
            proof: json!({"rule": "sample", "bij": bij}),
        }
    }
}

fn branch<R: Rng>(rng: &mut R) -> Item {
    let (t, e) = (pick(rng, &ASSIGNS), pick(rng, &ASSIGNS));
    let e2 = perturb(rng, e, &ASSIGNS);
    let proof = if rng.gen_bool(0.5) {
        json!({"rule": "assign"})
    } else {
        json!({"rule": "if", "then": {"rule": "assign"}, "else": {"rule": "assign"}})
    };
    Item {
        left: format!("if b then {t} else {e} fi"),
        right: format!("if b then {t} else {e2} fi"),
        len: 1,
        proof,
    }
}

fn lockstep_loop<R: Rng>(rng: &mut R) -> Item {
    let body = sample(rng);
    let inv = format!("{} /\\ i#1 = i#2", assertion(rng));
    let mid = format!("{inv} /\\ i#1 < 2 /\\ {}", assertion(rng));
    let whole = |s: &str| format!("i := 0; while i < 2 do {s}; i := i + 1 end");
    Item {
        left: whole(&body.left),
        right: whole(&body.right),
        len: 2,
        proof: json!({"rule": "seq", "parts": [
            {"left": 1, "right": 1, "mid": inv, "proof": {"rule": "assign"}},
            {"proof": {"rule": "while", "inv": inv, "body": {"rule": "seq", "parts": [
                {"left": 1, "right": 1, "mid": mid, "proof": body.proof},
                {"proof": {"rule": "assign"}}
            ]}}}
        ]}),
    }
}

pub fn case<R: Rng>(rng: &mut R) -> Case {
    let n = rng.gen_range(1..=3);
    let items: Vec<Item> = (0..n)
        .map(|_| match rng.gen_range(0..8) {
            0..=1 => assign(rng),
            2..=4 => sample(rng),
            5..=6 => branch(rng),
            _ => lockstep_loop(rng),
        })
        .collect();
    let join = |f: fn(&Item) -> &str| items.iter().map(f).collect::<Vec<_>>().join(";\n");
    let left = format!("{DECLS}{}", join(|i| &i.left));
    let right = format!("{DECLS}{}", join(|i| &i.right));
    let mut parts: Vec<Json> = Vec::new();
    for (k, item) in items.iter().enumerate() {
        if k + 1 == items.len() {
            parts.push(json!({"proof": item.proof}));
        } else {
            parts.push(json!({"left": item.len, "right": item.len, "mid": assertion(rng), "proof": item.proof}));
        }
    }
    let mut proof = if parts.len() == 1 {
        parts[0]["proof"].clone()
    } else {
        json!({"rule": "seq", "parts": parts})
    };
    match rng.gen_range(0..6) {
        0 => proof = json!({"rule": "case", "split": pick(rng, &ATOMS), "yes": proof, "no": proof}),
        1 => proof = json!({"rule": "conseq", "post": assertion(rng), "proof": proof}),
        _ => {}
    }
    let pre = if rng.gen_bool(0.7) {
        FULL.to_string()
    } else {
        assertion(rng)
    };
    Case {
        left,
        right,
        script: json!({"pre": pre, "post": assertion(rng), "proof": proof}),
    }
}
