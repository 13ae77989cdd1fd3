//! Program rewrites relating equivalent commands.

use std::collections::BTreeSet;

use serde_json::{json, Value as Json};
use thiserror::Error;

use super::ast::{BinOp, Command, Decls, DistExpr, Expr, Program, Type};
use super::typecheck::{dist_type, Scope};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transform {
    /// `while e do c` to `while e && cond do c; while e do c`.
    LoopSplit { cond: Expr },
    /// Inverse of `LoopSplit`.
    LoopMerge,
    /// `x ~~ Bern(p)` to `y ~~ Bern(p1); z ~~ Bern(p2); x := y && z`. The
    /// identity `p = p1 * p2` is left to the semantic check when `p` is not
    /// syntactically that product.
    CoinSplit {
        p1: Expr,
        p2: Expr,
        fresh: Option<(String, String)>,
    },
    /// Inverse of `CoinSplit`.
    CoinMerge,
    /// Exchanges two adjacent statements that share no written variable.
    SwapAdjacent,
    /// `x ~~ d` to `t ~~ joint; x := t.proj`, for a joint distribution whose
    /// `proj` marginal is `d`.
    MarginalSplit {
        dist: DistExpr,
        proj: usize,
        fresh: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("path {0:?} does not address a statement")]
    BadPath(Vec<usize>),
    #[error("{transform} does not apply to `{found}`")]
    Mismatch { transform: String, found: String },
    #[error("fresh variable {0} is already in use")]
    FreshClash(String),
    #[error("statements do not commute: {0}")]
    NotIndependent(String),
    #[error("ill-typed rewrite: {0}")]
    Type(String),
    #[error("malformed transform: {0}")]
    Malformed(String),
}

/// Result of a rewrite: the new command, its declarations, and the
/// variables that exist on only one side of the rewrite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub command: Command,
    pub decls: Decls,
    pub scratch: BTreeSet<String>,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::LoopSplit { .. } => "loop-split",
            Transform::LoopMerge => "loop-merge",
            Transform::CoinSplit { .. } => "coin-split",
            Transform::CoinMerge => "coin-merge",
            Transform::SwapAdjacent => "swap-adjacent",
            Transform::MarginalSplit { .. } => "marginal-split",
        }
    }

    /// Maps every expression parameter (used to strip side tags).
    pub fn map_exprs<E, F: FnMut(&Expr) -> Result<Expr, E>>(
        &self,
        mut f: F,
    ) -> Result<Transform, E> {
        Ok(match self {
            Transform::LoopSplit { cond } => Transform::LoopSplit { cond: f(cond)? },
            Transform::CoinSplit { p1, p2, fresh } => Transform::CoinSplit {
                p1: f(p1)?,
                p2: f(p2)?,
                fresh: fresh.clone(),
            },
            Transform::MarginalSplit { dist, proj, fresh } => {
                let mut err = None;
                let dist = dist.map_exprs(|e| match f(e) {
                    Ok(x) => x,
                    Err(m) => {
                        err.get_or_insert(m);
                        e.clone()
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                Transform::MarginalSplit {
                    dist,
                    proj: *proj,
                    fresh: fresh.clone(),
                }
            }
            other => other.clone(),
        })
    }

    pub fn to_json(&self) -> Json {
        match self {
            Transform::LoopSplit { cond } => {
                json!({ "name": "loop-split", "cond": cond.to_string() })
            }
            Transform::CoinSplit { p1, p2, fresh } => {
                let mut j =
                    json!({ "name": "coin-split", "p1": p1.to_string(), "p2": p2.to_string() });
                if let Some((a, b)) = fresh {
                    j["fresh"] = json!([a, b]);
                }
                j
            }
            Transform::MarginalSplit { dist, proj, fresh } => {
                json!({ "name": "marginal-split", "dist": dist.to_string(), "proj": proj, "fresh": fresh })
            }
            other => json!({ "name": other.name() }),
        }
    }

    /// Decodes the JSON form; expression parameters use relational syntax.
    pub fn from_json(j: &Json) -> Result<Transform, TransformError> {
        use super::parser::{parse_relational, parse_relational_dist};
        let bad = |m: &str| TransformError::Malformed(format!("{m} in {j}"));
        let name = j
            .get("name")
            .and_then(Json::as_str)
            .ok_or_else(|| bad("missing name"))?;
        let text = |k: &str| {
            j.get(k)
                .and_then(Json::as_str)
                .ok_or_else(|| bad(&format!("missing {k}")))
        };
        let expr = |k: &str| -> Result<Expr, TransformError> {
            parse_relational(text(k)?, &[]).map_err(|e| TransformError::Malformed(e.to_string()))
        };
        match name {
            "loop-split" => Ok(Transform::LoopSplit {
                cond: expr("cond")?,
            }),
            "loop-merge" => Ok(Transform::LoopMerge),
            "coin-split" => {
                let fresh = match j.get("fresh") {
                    None => None,
                    Some(f) => {
                        let names: Vec<&str> = f
                            .as_array()
                            .filter(|a| a.len() == 2)
                            .and_then(|a| a.iter().map(Json::as_str).collect::<Option<Vec<_>>>())
                            .ok_or_else(|| bad("fresh must be two names"))?;
                        Some((names[0].to_string(), names[1].to_string()))
                    }
                };
                Ok(Transform::CoinSplit {
                    p1: expr("p1")?,
                    p2: expr("p2")?,
                    fresh,
                })
            }
            "coin-merge" => Ok(Transform::CoinMerge),
            "swap-adjacent" => Ok(Transform::SwapAdjacent),
            "marginal-split" => Ok(Transform::MarginalSplit {
                dist: parse_relational_dist(text("dist")?)
                    .map_err(|e| TransformError::Malformed(e.to_string()))?,
                proj: j
                    .get("proj")
                    .and_then(Json::as_u64)
                    .ok_or_else(|| bad("missing proj"))? as usize,
                fresh: text("fresh")?.to_string(),
            }),
            other => Err(bad(&format!("unknown transform {other}"))),
        }
    }
}

fn mismatch(t: &Transform, found: &[Command]) -> TransformError {
    let found = found
        .iter()
        .map(Command::summary)
        .collect::<Vec<_>>()
        .join("; ");
    TransformError::Mismatch {
        transform: t.name().to_string(),
        found,
    }
}

type Edit<'a> = &'a mut dyn FnMut(&[Command], usize) -> Result<Vec<Command>, TransformError>;

/// Rewrites the statement list that contains the addressed statement.
/// Paths alternate statement indices and branch indices (then = 0,
/// else = 1, loop body = 0).
fn edit_at(
    c: &Command,
    path: &[usize],
    full: &[usize],
    f: Edit<'_>,
) -> Result<Command, TransformError> {
    let bad = || TransformError::BadPath(full.to_vec());
    let mut stmts = c.statements().to_vec();
    match path {
        [] => Err(bad()),
        [i] => {
            if *i >= stmts.len() {
                return Err(bad());
            }
            Ok(Command::seq(f(&stmts, *i)?))
        }
        [i, b, rest @ ..] => {
            let target = stmts.get(*i).ok_or_else(bad)?.clone();
            stmts[*i] = match (target, b) {
                (Command::If(e, a, els), 0) => {
                    Command::If(e, Box::new(edit_at(&a, rest, full, f)?), els)
                }
                (Command::If(e, a, els), 1) => {
                    Command::If(e, a, Box::new(edit_at(&els, rest, full, f)?))
                }
                (Command::While(e, body), 0) => {
                    Command::While(e, Box::new(edit_at(&body, rest, full, f)?))
                }
                _ => return Err(bad()),
            };
            Ok(Command::seq(stmts))
        }
    }
}

/// The statement addressed by `path`.
pub fn statement_at<'a>(c: &'a Command, path: &[usize]) -> Option<&'a Command> {
    match path {
        [i] => c.statements().get(*i),
        [i, b, rest @ ..] => match (c.statements().get(*i)?, b) {
            (Command::If(_, a, _), 0) => statement_at(a, rest),
            (Command::If(_, _, e), 1) => statement_at(e, rest),
            (Command::While(_, body), 0) => statement_at(body, rest),
            _ => None,
        },
        [] => None,
    }
}

fn replace(stmts: &[Command], at: usize, width: usize, with: Vec<Command>) -> Vec<Command> {
    let mut out = stmts[..at].to_vec();
    out.extend(with);
    out.extend_from_slice(&stmts[at + width..]);
    out
}

pub fn apply_transform(
    p: &Program,
    t: &Transform,
    path: &[usize],
) -> Result<Program, TransformError> {
    let r = rewrite(&p.body, &p.decls, t, path)?;
    Ok(Program {
        decls: r.decls,
        body: r.command,
        ret: p.ret.clone(),
    })
}

pub fn rewrite(
    c: &Command,
    decls: &Decls,
    t: &Transform,
    path: &[usize],
) -> Result<Rewrite, TransformError> {
    let mut decls = decls.clone();
    let mut scratch = BTreeSet::new();
    let in_use: BTreeSet<String> = decls.vars.keys().cloned().chain(c.vars()).collect();
    let fresh_var = |name: &str, ty: Type, decls: &mut Decls, scratch: &mut BTreeSet<String>| {
        if in_use.contains(name) || scratch.contains(name) {
            return Err(TransformError::FreshClash(name.to_string()));
        }
        decls.vars.insert(name.to_string(), ty);
        scratch.insert(name.to_string());
        Ok(())
    };
    let command = {
        let decls_ref = &mut decls;
        let scratch_ref = &mut scratch;
        let mut f = |stmts: &[Command], k: usize| -> Result<Vec<Command>, TransformError> {
            let window = |w: usize| stmts.get(k..k + w).ok_or_else(|| mismatch(t, &stmts[k..]));
            match t {
                Transform::LoopSplit { cond } => match &stmts[k] {
                    Command::While(e, body) => Ok(replace(
                        stmts,
                        k,
                        1,
                        vec![
                            Command::While(Expr::and(e.clone(), cond.clone()), body.clone()),
                            Command::While(e.clone(), body.clone()),
                        ],
                    )),
                    _ => Err(mismatch(t, &stmts[k..=k])),
                },
                Transform::LoopMerge => match window(2)? {
                    [Command::While(Expr::Binary(BinOp::And, e1, _), b1), Command::While(e2, b2)]
                        if **e1 == *e2 && b1 == b2 =>
                    {
                        Ok(replace(
                            stmts,
                            k,
                            2,
                            vec![Command::While(e2.clone(), b2.clone())],
                        ))
                    }
                    w => Err(mismatch(t, w)),
                },
                Transform::CoinSplit { p1, p2, fresh } => match &stmts[k] {
                    Command::Rand(x, DistExpr::Bern(_)) => {
                        if decls_ref.vars.get(x) != Some(&Type::Bool) {
                            return Err(TransformError::Type(format!("{x} is not boolean")));
                        }
                        let (y, z) = fresh
                            .clone()
                            .unwrap_or_else(|| (format!("_{x}1"), format!("_{x}2")));
                        fresh_var(&y, Type::Bool, decls_ref, scratch_ref)?;
                        fresh_var(&z, Type::Bool, decls_ref, scratch_ref)?;
                        Ok(replace(
                            stmts,
                            k,
                            1,
                            vec![
                                Command::Rand(y.clone(), DistExpr::Bern(p1.clone())),
                                Command::Rand(z.clone(), DistExpr::Bern(p2.clone())),
                                Command::Assign(x.clone(), Expr::and(Expr::var(&y), Expr::var(&z))),
                            ],
                        ))
                    }
                    _ => Err(mismatch(t, &stmts[k..=k])),
                },
                Transform::CoinMerge => match window(3)? {
                    [Command::Rand(a, DistExpr::Bern(p1)), Command::Rand(b, DistExpr::Bern(p2)), Command::Assign(x, Expr::Binary(BinOp::And, l, r))]
                        if a != b
                            && x != a
                            && x != b
                            && **l == Expr::var(a)
                            && **r == Expr::var(b)
                            && !p2.program_vars().contains(a) =>
                    {
                        scratch_ref.insert(a.clone());
                        scratch_ref.insert(b.clone());
                        let p = Expr::bin(BinOp::Mul, p1.clone(), p2.clone());
                        Ok(replace(
                            stmts,
                            k,
                            3,
                            vec![Command::Rand(x.clone(), DistExpr::Bern(p))],
                        ))
                    }
                    w => Err(mismatch(t, w)),
                },
                Transform::SwapAdjacent => {
                    let w = window(2)?;
                    let (a, b) = (&w[0], &w[1]);
                    let (wa, wb) = (a.assigned(), b.assigned());
                    let clash = wa
                        .iter()
                        .find(|v| b.vars().contains(*v))
                        .or_else(|| wb.iter().find(|v| a.vars().contains(*v)));
                    if let Some(v) = clash {
                        return Err(TransformError::NotIndependent(format!(
                            "both statements use {v}"
                        )));
                    }
                    Ok(replace(stmts, k, 2, vec![b.clone(), a.clone()]))
                }
                Transform::MarginalSplit { dist, proj, fresh } => match &stmts[k] {
                    Command::Rand(x, _) => {
                        let ty = dist_type(dist, &Scope::program(decls_ref))
                            .map_err(TransformError::Type)?;
                        match &ty {
                            Type::Tuple(ts) if *proj >= 1 && *proj <= ts.len() => {}
                            other => {
                                return Err(TransformError::Type(format!(
                                    "cannot project .{proj} out of {other}"
                                )))
                            }
                        }
                        fresh_var(fresh, ty, decls_ref, scratch_ref)?;
                        Ok(replace(
                            stmts,
                            k,
                            1,
                            vec![
                                Command::Rand(fresh.clone(), dist.clone()),
                                Command::Assign(
                                    x.clone(),
                                    Expr::Proj(Box::new(Expr::var(fresh)), *proj),
                                ),
                            ],
                        ))
                    }
                    _ => Err(mismatch(t, &stmts[k..=k])),
                },
            }
        };
        edit_at(c, path, path, &mut f)?
    };
    Ok(Rewrite {
        command,
        decls,
        scratch,
    })
}
