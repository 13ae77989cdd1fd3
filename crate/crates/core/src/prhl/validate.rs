//! Semantic validity of judgments by exact execution and the lifting oracle.

use std::collections::BTreeSet;

use super::space::{side_vars, tagged_vars, Search, Space, SpaceError};
use serde_json::{json, Value as Json};

use super::{memory_json, Judgment};
use crate::dist::{lifting_witness_with, Coupling, SubDist};
use crate::pwhile::ast::{Side, Var};
use crate::pwhile::{eval_assertion, run, DomainDecl, EvalError, Memory, OnExhaustion};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    /// The lifting of the postcondition holds on every pair; `pairs` may be
    /// zero when the precondition is unsatisfiable.
    Valid {
        pairs: u64,
    },
    Invalid {
        left: Memory,
        right: Memory,
        reason: String,
    },
    Indeterminate {
        reason: String,
    },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid { .. })
    }

    pub fn to_json(&self) -> Json {
        match self {
            Validity::Valid { pairs } => json!({"status": "valid", "pairs": pairs}),
            Validity::Invalid {
                left,
                right,
                reason,
            } => json!({
                "status": "invalid",
                "reason": reason,
                "left": memory_json(left),
                "right": memory_json(right),
            }),
            Validity::Indeterminate { reason } => {
                json!({"status": "indeterminate", "reason": reason})
            }
        }
    }
}

enum Stop {
    Space(SpaceError),
    Invalid(Memory, Memory, String),
    Indeterminate(String),
}

impl From<SpaceError> for Stop {
    fn from(e: SpaceError) -> Self {
        Stop::Space(e)
    }
}

/// The pair of output distributions for one initial pair, projected onto
/// the postcondition's variables, and the coupling witnessing the lifting.
pub struct Witness<'a> {
    pub left: &'a Memory,
    pub right: &'a Memory,
    pub out1: &'a SubDist<Memory>,
    pub out2: &'a SubDist<Memory>,
    pub coupling: &'a Coupling<Memory, Memory>,
}

fn restrict(m: &Memory, names: &BTreeSet<String>) -> Memory {
    m.iter()
        .filter(|(k, _)| names.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Variables whose initial values matter: those of the precondition, those
/// read by either program, and postcondition variables a program may leave
/// untouched.
pub fn input_vars(j: &Judgment) -> BTreeSet<Var> {
    let mut vars = tagged_vars(&j.pre);
    vars.extend(side_vars(&j.left.body.live_in(), Side::Left));
    vars.extend(side_vars(&j.right.body.live_in(), Side::Right));
    let must = [j.left.body.must_assign(), j.right.body.must_assign()];
    for v in tagged_vars(&j.post) {
        let s = if v.side == Some(Side::Left) { 0 } else { 1 };
        if !must[s].contains(&v.name) {
            vars.insert(v);
        }
    }
    vars
}

/// Checks the judgment against its meaning: for each initial pair satisfying
/// the precondition, the output distributions are related by the lifting of
/// the postcondition. `visit` sees each witness coupling.
pub fn validate_with<F>(j: &Judgment, dom: &DomainDecl, fuel: usize, mut visit: F) -> Validity
where
    F: FnMut(&Witness<'_>),
{
    let space = Space::new(dom, &j.left.decls, &j.right.decls);
    let post_vars = tagged_vars(&j.post);
    let names = |side: Side| -> BTreeSet<String> {
        post_vars
            .iter()
            .filter(|v| v.side == Some(side))
            .map(|v| v.name.clone())
            .collect()
    };
    let (n1, n2) = (names(Side::Left), names(Side::Right));
    let mut reason = String::new();
    let search = space.search::<Stop, _>(&j.pre, &input_vars(j), |m1, m2| {
        let o1 = run(&j.left.body, m1, fuel, OnExhaustion::Drop)
            .map_err(|e| Stop::Invalid(m1.clone(), m2.clone(), e.to_string()))?;
        let o2 = run(&j.right.body, m2, fuel, OnExhaustion::Drop)
            .map_err(|e| Stop::Invalid(m1.clone(), m2.clone(), e.to_string()))?;
        if o1.exhausted() || o2.exhausted() {
            return Err(Stop::Indeterminate(format!(
                "a loop ran out of fuel ({fuel} iterations) from {}",
                super::space::show_pair(m1, m2)
            )));
        }
        let out1 = o1.dist.map(|m| restrict(m, &n1));
        let out2 = o2.dist.map(|m| restrict(m, &n2));
        let found = lifting_witness_with::<_, _, EvalError, _>(&out1, &out2, |a, b| {
            eval_assertion(a, b, &j.post)
        })
        .map_err(|e| Stop::Invalid(m1.clone(), m2.clone(), e.to_string()))?;
        match found {
            Some(coupling) => {
                visit(&Witness {
                    left: m1,
                    right: m2,
                    out1: &out1,
                    out2: &out2,
                    coupling: &coupling,
                });
                Ok(true)
            }
            None => {
                reason = if out1.mass() != out2.mass() {
                    format!("output masses differ: {} vs {}", out1.mass(), out2.mass())
                } else {
                    "no coupling of the outputs satisfies the postcondition".into()
                };
                Ok(false)
            }
        }
    });
    match search {
        Ok(Search::Done { pairs }) => Validity::Valid { pairs },
        Ok(Search::Vacuous) => Validity::Valid { pairs: 0 },
        Ok(Search::Stopped { left, right }) => Validity::Invalid {
            left,
            right,
            reason,
        },
        Err(Stop::Space(SpaceError::Eval(at))) => Validity::Invalid {
            reason: format!("evaluating `{}`: {}", at.expr, at.err),
            left: at.left,
            right: at.right,
        },
        Err(Stop::Space(e)) => Validity::Indeterminate {
            reason: e.to_string(),
        },
        Err(Stop::Invalid(left, right, reason)) => Validity::Invalid {
            left,
            right,
            reason,
        },
        Err(Stop::Indeterminate(reason)) => Validity::Indeterminate { reason },
    }
}

pub fn validate_semantics(j: &Judgment, dom: &DomainDecl, fuel: usize) -> Validity {
    validate_with(j, dom, fuel, |_| {})
}
