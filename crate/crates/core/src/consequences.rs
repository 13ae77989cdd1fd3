//! Distribution-level conclusions drawn from verified judgments: total
//! variation bounds and stochastic dominance.

use std::collections::BTreeSet;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dist::{
    lifting_exists, stochastically_dominates, strassen_check, tv_distance, Coupling, DistError,
    Prob, SubDist, Value,
};
use crate::prhl::space::{Space, SpaceError};
use crate::prhl::{input_vars, memory_json, Judgment, VerifiedJudgment};
use crate::pwhile::ast::{BinOp, Expr, Side};
use crate::pwhile::{
    eval_assertion, interpret, pushforward, DomainDecl, EvalError, InterpError, Memory,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsequenceError {
    #[error("postcondition `{0}` does not have the required shape")]
    Shape(String),
    #[error("the event `{0}` mentions variables of the second program")]
    RightVars(String),
    #[error("the initial pair does not satisfy the precondition")]
    Precondition,
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl ConsequenceError {
    /// Whether the error comes from fuel or enumeration limits.
    pub fn is_capacity(&self) -> bool {
        match self {
            ConsequenceError::Interp(InterpError::FuelExhausted { .. }) => true,
            ConsequenceError::Space(e) => e.is_capacity(),
            _ => false,
        }
    }
}

fn sides_of(e: &Expr) -> BTreeSet<Side> {
    e.free_vars().into_iter().filter_map(|v| v.side).collect()
}

fn only(e: &Expr, side: Side) -> bool {
    sides_of(e).iter().all(|s| *s == side)
}

/// Splits `a = b` into the left and right observables.
fn equality(e: &Expr) -> Option<(Expr, Expr)> {
    let Expr::Binary(BinOp::Eq, a, b) = e else {
        return None;
    };
    if only(a, Side::Left) && only(b, Side::Right) {
        Some(((**a).clone(), (**b).clone()))
    } else if only(a, Side::Right) && only(b, Side::Left) {
        Some(((**b).clone(), (**a).clone()))
    } else {
        None
    }
}

/// The parts of a postcondition `phi ==> v1#1 = v2#2`, with untagged
/// observables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TvShape {
    pub phi: Expr,
    pub v1: Expr,
    pub v2: Expr,
}

pub fn tv_shape(post: &Expr) -> Result<TvShape, ConsequenceError> {
    let shape = || ConsequenceError::Shape(post.to_string());
    let (phi, eq) = match post {
        Expr::Binary(BinOp::Implies, phi, eq) => ((**phi).clone(), &**eq),
        other => (Expr::bool(true), other),
    };
    let (a, b) = equality(eq).ok_or_else(shape)?;
    if !only(&phi, Side::Left) {
        return Err(ConsequenceError::RightVars(phi.to_string()));
    }
    let untag = |e: &Expr, s| e.untag(s).map_err(|_| shape());
    Ok(TvShape {
        phi: untag(&phi, Side::Left)?,
        v1: untag(&a, Side::Left)?,
        v2: untag(&b, Side::Right)?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TvReport {
    pub left: Memory,
    pub right: Memory,
    pub tv: Prob,
    /// Probability that the first program's output violates the event.
    pub bound: Prob,
    pub holds: bool,
}

impl TvReport {
    pub fn to_json(&self) -> Json {
        json!({
            "left": memory_json(&self.left),
            "right": memory_json(&self.right),
            "tv": self.tv.to_string(),
            "bound": self.bound.to_string(),
            "holds": self.holds,
        })
    }
}

fn require_pre(j: &Judgment, m1: &Memory, m2: &Memory) -> Result<(), ConsequenceError> {
    if eval_assertion(m1, m2, &j.pre)? {
        Ok(())
    } else {
        Err(ConsequenceError::Precondition)
    }
}

/// Distance between the observables' output distributions, against the
/// probability of the event failing on the first program.
pub fn tv_bound(
    vj: &VerifiedJudgment,
    m1: &Memory,
    m2: &Memory,
    fuel: usize,
) -> Result<TvReport, ConsequenceError> {
    let j = vj.judgment();
    let shape = tv_shape(&j.post)?;
    require_pre(j, m1, m2)?;
    let out1 = interpret(&j.left.body, m1, fuel)?;
    let out2 = interpret(&j.right.body, m2, fuel)?;
    let tv = tv_distance(
        &pushforward(&out1, &shape.v1)?,
        &pushforward(&out2, &shape.v2)?,
    );
    let bound = pushforward(&out1, &shape.phi)?.prob(&Value::Bool(false));
    let holds = tv.ratio() <= bound.ratio();
    Ok(TvReport {
        left: m1.clone(),
        right: m2.clone(),
        tv,
        bound,
        holds,
    })
}

/// The `(v1, v2)` pairs of a postcondition `v1#1 >= v2#2 /\ ...`.
pub fn sd_shape(post: &Expr) -> Result<Vec<(Expr, Expr)>, ConsequenceError> {
    let shape = || ConsequenceError::Shape(post.to_string());
    post.conjuncts()
        .into_iter()
        .map(|c| {
            let (hi, lo) = match c {
                Expr::Binary(BinOp::Ge, a, b) => (a, b),
                Expr::Binary(BinOp::Le, a, b) => (b, a),
                _ => return Err(shape()),
            };
            if !(only(hi, Side::Left) && only(lo, Side::Right)) {
                return Err(shape());
            }
            Ok((
                hi.untag(Side::Left).map_err(|_| shape())?,
                lo.untag(Side::Right).map_err(|_| shape())?,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdReport {
    pub left: Memory,
    pub right: Memory,
    /// The observable of the first program, untagged.
    pub observable: Expr,
    pub upper: SubDist<Value>,
    pub lower: SubDist<Value>,
    pub dominates: bool,
    /// A coupling supported on `>=`, when one exists.
    pub witness: Option<Coupling<Value, Value>>,
}

impl SdReport {
    pub fn to_json(&self) -> Json {
        json!({
            "left": memory_json(&self.left),
            "right": memory_json(&self.right),
            "observable": self.observable.to_string(),
            "upper": self.upper.to_json(),
            "lower": self.lower.to_json(),
            "dominates": self.dominates,
            "witness": self.witness.as_ref().map(|c| c.to_value_dist().to_json()),
        })
    }
}

/// Dominance of each `>=` conjunct's observables, cross-checked against the
/// existence of a monotone coupling.
pub fn sd_conclude(
    vj: &VerifiedJudgment,
    m1: &Memory,
    m2: &Memory,
    fuel: usize,
) -> Result<Vec<SdReport>, ConsequenceError> {
    let j = vj.judgment();
    let parts = sd_shape(&j.post)?;
    require_pre(j, m1, m2)?;
    let out1 = interpret(&j.left.body, m1, fuel)?;
    let out2 = interpret(&j.right.body, m2, fuel)?;
    parts
        .into_iter()
        .map(|(v1, v2)| {
            let upper = pushforward(&out1, &v1)?;
            let lower = pushforward(&out2, &v2)?;
            let dominates = stochastically_dominates(&upper, &lower)?;
            strassen_check(&upper, &lower)?;
            let ge = |a: &Value, b: &Value| a >= b;
            let witness = lifting_exists(&ge, &upper, &lower);
            Ok(SdReport {
                left: m1.clone(),
                right: m2.clone(),
                observable: v1,
                upper,
                lower,
                dominates,
                witness,
            })
        })
        .collect()
}

fn initial_pairs(
    j: &Judgment,
    dom: &DomainDecl,
) -> Result<Vec<(Memory, Memory)>, ConsequenceError> {
    let space = Space::new(dom, &j.left.decls, &j.right.decls);
    Ok(space.pairs(&j.pre, &input_vars(j))?)
}

/// [`tv_bound`] at every in-domain initial pair satisfying the precondition.
pub fn tv_reports(
    vj: &VerifiedJudgment,
    dom: &DomainDecl,
    fuel: usize,
) -> Result<Vec<TvReport>, ConsequenceError> {
    initial_pairs(vj.judgment(), dom)?
        .iter()
        .map(|(m1, m2)| tv_bound(vj, m1, m2, fuel))
        .collect()
}

/// [`sd_conclude`] at every in-domain initial pair satisfying the
/// precondition.
pub fn sd_reports(
    vj: &VerifiedJudgment,
    dom: &DomainDecl,
    fuel: usize,
) -> Result<Vec<SdReport>, ConsequenceError> {
    let mut out = Vec::new();
    for (m1, m2) in initial_pairs(vj.judgment(), dom)? {
        out.extend(sd_conclude(vj, &m1, &m2, fuel)?);
    }
    Ok(out)
}
