//! Two birth-death chains started in order stay in order. On adjacent
//! states both chains sample their move from a joint table that never
//! lets the upper chain step below the lower one.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::json;
use thiserror::Error;

use super::{rat_src, Built, CaseStudyError, Check, Conclusion, Params};
use crate::dist::{ratio, SubDist, Value};
use crate::pwhile::{eval_dist, DistExpr, Domain, DomainDecl, Expr, Memory, Side};

pub const PROGRAM: &str = "\
enum Move = Left | Right | Still;
var state, start, i, steps : int;
var a, b : rat;
var mv : Move;
dist bd(down, up) = {Left: down, Right: up, Still: 1 - down - up};

state := start; i := 0;
while i < steps do
  mv ~~ bd(a, b);
  if mv = Left then state := state - 1
  else if mv = Right then state := state + 1 fi
  i := i + 1;
end
return state
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Left,
    Right,
    Still,
}

impl Move {
    pub fn name(self) -> &'static str {
        match self {
            Move::Left => "Left",
            Move::Right => "Right",
            Move::Still => "Still",
        }
    }

    pub fn value(self) -> Value {
        Value::enumeration(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DcoupleError {
    #[error("{name} = {value} is outside [0, 1]")]
    Range { name: &'static str, value: String },
    #[error("entry ({}, {}) is negative: {value}", .entry.0.name(), .entry.1.name())]
    Negative { entry: (Move, Move), value: String },
}

type Row = ((Move, Move), BigRational);

fn positive(x: BigRational) -> BigRational {
    if x.is_negative() {
        BigRational::zero()
    } else {
        x
    }
}

fn table(
    rows: Vec<Row>,
    params: [(&'static str, &BigRational); 4],
) -> Result<DistExpr, DcoupleError> {
    for (name, v) in params {
        if v.is_negative() || *v > ratio(1, 1) {
            return Err(DcoupleError::Range {
                name,
                value: rat_src(v),
            });
        }
    }
    if let Some((entry, value)) = rows.iter().find(|(_, w)| w.is_negative()) {
        return Err(DcoupleError::Negative {
            entry: *entry,
            value: rat_src(value),
        });
    }
    Ok(DistExpr::Table(
        rows.into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|((x, y), w)| {
                (
                    Expr::Lit(Value::pair(x.value(), y.value())),
                    Expr::Lit(Value::Rat(w)),
                )
            })
            .collect(),
    ))
}

fn residual(
    a_succ: &BigRational,
    b_i: &BigRational,
    b_succ: &BigRational,
    a_i: &BigRational,
) -> BigRational {
    let low = if b_succ < a_i { b_succ } else { a_i };
    ratio(1, 1) - low - a_succ - b_i - (b_succ - a_i).abs()
}

/// The adjacent-state coupling with the upper chain (state `i + 1`, moves
/// `a_succ` down and `b_succ` up) as first component and the lower chain
/// (state `i`) as second. `(Left, Right)` never occurs.
pub fn dcouple_table(
    a_i: &BigRational,
    a_succ: &BigRational,
    b_i: &BigRational,
    b_succ: &BigRational,
) -> Result<DistExpr, DcoupleError> {
    use Move::*;
    let low = if b_succ < a_i {
        b_succ.clone()
    } else {
        a_i.clone()
    };
    let rows = vec![
        ((Right, Left), low),
        ((Right, Still), positive(b_succ - a_i)),
        ((Still, Left), positive(a_i - b_succ)),
        ((Left, Still), a_succ.clone()),
        ((Still, Right), b_i.clone()),
        ((Still, Still), residual(a_succ, b_i, b_succ, a_i)),
    ];
    table(
        rows,
        [
            ("a_i", a_i),
            ("a_succ", a_succ),
            ("b_i", b_i),
            ("b_succ", b_succ),
        ],
    )
}

/// The table with the entry labels exactly as usually listed for this
/// coupling. Its marginals do not match the chains; see the case study
/// notes.
pub fn distr_adjacent_verbatim(
    a_i: &BigRational,
    a_succ: &BigRational,
    b_i: &BigRational,
    b_succ: &BigRational,
) -> Result<DistExpr, DcoupleError> {
    use Move::*;
    let low = if b_succ < a_i {
        b_succ.clone()
    } else {
        a_i.clone()
    };
    let rows = vec![
        ((Right, Left), low),
        ((Still, Left), positive(b_succ - a_i)),
        ((Right, Still), positive(a_i - b_succ)),
        ((Still, Right), a_succ.clone()),
        ((Left, Still), b_i.clone()),
        ((Still, Still), residual(a_succ, b_i, b_succ, a_i)),
    ];
    table(
        rows,
        [
            ("a_i", a_i),
            ("a_succ", a_succ),
            ("b_i", b_i),
            ("b_succ", b_succ),
        ],
    )
}

/// `bd(down, up)` as an exact distribution over moves.
pub fn bd(down: &BigRational, up: &BigRational) -> SubDist<Value> {
    let still = ratio(1, 1) - down - up;
    SubDist::from_weights([
        (Move::Left.value(), down.clone()),
        (Move::Right.value(), up.clone()),
        (Move::Still.value(), still),
    ])
    .expect("probabilities checked by the caller")
}

fn joint(t: &DistExpr) -> SubDist<Value> {
    eval_dist(&Memory::new(), t).expect("literal tables evaluate")
}

fn marginal(j: &SubDist<Value>, k: usize) -> SubDist<Value> {
    j.map(|v| match v {
        Value::Tuple(xs) => xs[k].clone(),
        other => other.clone(),
    })
}

/// Whether the table's marginals are the upper and lower chains' moves.
pub fn marginals_match(t: &DistExpr, upper: &SubDist<Value>, lower: &SubDist<Value>) -> bool {
    let j = joint(t);
    marginal(&j, 0) == *upper && marginal(&j, 1) == *lower
}

pub(super) fn build(p: &Params) -> Result<Built, CaseStudyError> {
    p.check_known(&["steps", "a", "b", "start1", "start2"])?;
    let steps = p.int("steps", 2, 1, 4)?;
    let a = p.prob("a", ratio(3, 10))?;
    let b = p.prob("b", ratio(1, 5))?;
    if &a + &b > ratio(1, 1) {
        return Err(super::param_err("b", "a + b must not exceed 1"));
    }
    let start1 = p.int("start1", 1, -4, 8)?;
    let start2 = p.int("start2", 0, -4, 8)?;
    if start1 < start2 {
        return Err(super::param_err("start2", "must not exceed start1"));
    }
    let adjacent = dcouple_table(&a, &a, &b, &b)?;
    let frame = "steps#1 = steps#2 /\\ a#1 = a#2 /\\ b#1 = b#2";
    let inv = format!("{frame} /\\ i#1 = i#2 /\\ state#1 >= state#2");
    let step = format!("{inv} /\\ i#1 < steps#1");
    let split = |side: u8, proj: usize, inner: serde_json::Value| {
        json!({"rule": "equiv", "side": side, "path": [0],
               "transform": {"name": "marginal-split", "dist": adjacent.to_string(), "proj": proj, "fresh": "t"},
               "proof": inner})
    };
    let identical = |mid: String| {
        json!({"rule": "seq", "parts": [
            {"left": 1, "right": 1, "mid": mid, "proof": {"rule": "sample"}},
            {"proof": {"rule": "assign"}}
        ]})
    };
    let shared = identical(format!(
        "{step} /\\ state#1 = state#2 + 1 /\\ t#1 = t#2 /\\ t#1 != (Left, Right)"
    ));
    let body = json!({"rule": "case", "split": "state#1 = state#2",
        "yes": identical(format!("{step} /\\ state#1 = state#2 /\\ mv#1 = mv#2")),
        "no": {"rule": "case", "split": "state#1 = state#2 + 1",
            "yes": split(1, 1, split(2, 2, shared)),
            "no": identical(format!("{step} /\\ state#1 >= state#2 + 2 /\\ mv#1 = mv#2"))}});
    let script = json!({
        "pre": format!("{frame} /\\ start#1 >= start#2"),
        "post": "state#1 >= state#2",
        "proof": {"rule": "seq", "parts": [
            {"left": 2, "right": 2, "mid": inv, "proof": {"rule": "assign"}},
            {"proof": {"rule": "while", "inv": inv, "body": body}}
        ]}
    });
    let rats = |v: &BigRational| Domain::Values(vec![Value::Rat(v.clone())]);
    let domains = DomainDecl::new()
        .with_side(Side::Left, "start", Domain::Int(start1, start1))
        .with_side(Side::Right, "start", Domain::Int(start2, start2))
        .with("steps", Domain::Int(steps, steps))
        .with("i", Domain::Int(0, steps))
        .with("state", Domain::Int(start2 - steps, start1 + steps))
        .with("a", rats(&a))
        .with("b", rats(&b));
    Ok(Built {
        name: "birth-death",
        params: [
            ("steps", steps.to_string()),
            ("a", rat_src(&a)),
            ("b", rat_src(&b)),
            ("start1", start1.to_string()),
            ("start2", start2.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        programs: vec![
            ("program.pwhile".into(), PROGRAM.into()),
            ("program.pwhile".into(), PROGRAM.into()),
        ],
        domains,
        script,
        fuel: steps as usize + 1,
        conclusion: Conclusion::Sd,
    })
}

fn param(b: &Built, name: &str) -> BigRational {
    crate::dist::parse_ratio(&b.params[name]).expect("built parameters are rationals")
}

pub(super) fn side_checks(b: &Built) -> Result<Vec<Check>, CaseStudyError> {
    let (a, bb) = (param(b, "a"), param(b, "b"));
    let t = dcouple_table(&a, &a, &bb, &bb)?;
    let chain = bd(&a, &bb);
    let marg = Check::new(
        "adjacent table marginals match bd",
        marginals_match(&t, &chain, &chain),
        t.to_string(),
    );
    let crossing = joint(&t).prob(&Value::pair(Move::Left.value(), Move::Right.value()));
    let zero = Check::new(
        "(Left, Right) has probability 0",
        crossing.is_zero(),
        crossing.to_string(),
    );
    Ok(vec![marg, zero])
}
