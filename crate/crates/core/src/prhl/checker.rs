//! Structural proof checking with enumerated side conditions.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value as Json};

use super::proof::{ProofNode, SeqPart};
use super::space::{side_vars, tagged_vars, Entailment, EvalAt, Space, SpaceError};
use super::{memory_json, Judgment};
use crate::dist::Value;
use crate::pwhile::ast::{BinOp, Command, Decls, DistExpr, Expr, Side, Var};
use crate::pwhile::eval::{eval, eval_assertion, eval_dist_in, Env};
use crate::pwhile::typecheck::check_assertion;
use crate::pwhile::{
    equivalent_except, is_lossless, rewrite, DomainDecl, Equivalence, EvalError, Lossless, Memory,
};

pub const VERDICT_SCHEMA: &str = "prhl-verdict/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Syntactic,
    Enumerated {
        pairs: u64,
    },
    /// The hypothesis is unsatisfiable over the domains.
    Vacuous,
    Structural,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub left: Memory,
    pub right: Memory,
    /// The offending sample value, for sampling rules.
    pub sample: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObligationResult {
    Discharged(Method),
    Failed {
        reason: String,
        counterexample: Option<Counterexample>,
    },
    /// Enumeration cap, missing domain or loop fuel prevented a decision.
    Indeterminate {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub rule: String,
    /// Position of the rule application in the proof tree.
    pub path: String,
    pub what: String,
    /// Hypothesis and conclusion, for entailment obligations.
    pub formula: Option<(Expr, Expr)>,
    pub result: ObligationResult,
}

impl Obligation {
    pub fn passed(&self) -> bool {
        matches!(self.result, ObligationResult::Discharged(_))
    }

    pub fn to_json(&self, index: usize) -> Json {
        let mut o = Map::new();
        o.insert("index".into(), json!(index));
        o.insert("rule".into(), json!(self.rule));
        o.insert("path".into(), json!(self.path));
        o.insert("what".into(), json!(self.what));
        if let Some((h, c)) = &self.formula {
            o.insert("hyp".into(), json!(h.to_string()));
            o.insert("concl".into(), json!(c.to_string()));
        }
        match &self.result {
            ObligationResult::Discharged(m) => {
                o.insert("result".into(), json!("ok"));
                let (name, pairs) = match m {
                    Method::Syntactic => ("syntactic", None),
                    Method::Enumerated { pairs } => ("enumerated", Some(*pairs)),
                    Method::Vacuous => ("vacuous", None),
                    Method::Structural => ("structural", None),
                };
                o.insert("method".into(), json!(name));
                if let Some(p) = pairs {
                    o.insert("pairs".into(), json!(p));
                }
            }
            ObligationResult::Failed {
                reason,
                counterexample,
            } => {
                o.insert("result".into(), json!("failed"));
                o.insert("reason".into(), json!(reason));
                if let Some(cx) = counterexample {
                    let mut c = Map::new();
                    c.insert("left".into(), memory_json(&cx.left));
                    c.insert("right".into(), memory_json(&cx.right));
                    if let Some(v) = &cx.sample {
                        c.insert("sample".into(), v.to_json());
                    }
                    o.insert("counterexample".into(), Json::Object(c));
                }
            }
            ObligationResult::Indeterminate { reason } => {
                o.insert("result".into(), json!("indeterminate"));
                o.insert("reason".into(), json!(reason));
            }
        }
        Json::Object(o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Accepted,
    Rejected,
    Indeterminate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
            Status::Indeterminate => "indeterminate",
        }
    }
}

/// The log of every obligation raised while checking a proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub obligations: Vec<Obligation>,
}

impl Verdict {
    pub fn status(&self) -> Status {
        if self
            .obligations
            .iter()
            .any(|o| matches!(o.result, ObligationResult::Failed { .. }))
        {
            Status::Rejected
        } else if self
            .obligations
            .iter()
            .any(|o| matches!(o.result, ObligationResult::Indeterminate { .. }))
        {
            Status::Indeterminate
        } else {
            Status::Accepted
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations.iter().filter(|o| !o.passed())
    }

    pub fn to_json(&self) -> Json {
        json!({
            "schema": VERDICT_SCHEMA,
            "status": self.status().as_str(),
            "obligations": self.obligations.iter().enumerate().map(|(i, o)| o.to_json(i)).collect::<Vec<_>>(),
        })
    }
}

/// A judgment together with a proof that the checker accepted.
#[derive(Clone, Debug)]
pub struct VerifiedJudgment {
    judgment: Judgment,
    proof: ProofNode,
    verdict: Verdict,
}

impl VerifiedJudgment {
    pub fn judgment(&self) -> &Judgment {
        &self.judgment
    }

    pub fn proof(&self) -> &ProofNode {
        &self.proof
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }
}

#[derive(Clone)]
struct Goal {
    cmd: [Command; 2],
    decls: [Decls; 2],
    pre: Expr,
    post: Expr,
}

impl Goal {
    fn with(&self, c1: Command, c2: Command, pre: Expr, post: Expr) -> Goal {
        Goal {
            cmd: [c1, c2],
            decls: self.decls.clone(),
            pre,
            post,
        }
    }

    fn conditions(&self, pre: Expr, post: Expr) -> Goal {
        Goal {
            cmd: self.cmd.clone(),
            decls: self.decls.clone(),
            pre,
            post,
        }
    }
}

fn slot(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

fn iff(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::Iff, a, b)
}

fn single_rand(c: &Command) -> Option<(&String, &DistExpr)> {
    match c {
        Command::Rand(x, d) => Some((x, d)),
        _ => None,
    }
}

fn single_while(c: &Command) -> Option<(&Expr, &Command)> {
    match c {
        Command::While(e, body) => Some((e, body)),
        _ => None,
    }
}

/// Splits a leading conditional off a statement list: guard, branches and
/// the statements after it.
fn leading_if(c: &Command) -> Option<(&Expr, &Command, &Command, &[Command])> {
    match c.statements() {
        [Command::If(e, a, b), rest @ ..] => Some((e, a, b, rest)),
        _ => None,
    }
}

fn prefixed(branch: &Command, rest: &[Command]) -> Command {
    Command::seq(std::iter::once(branch.clone()).chain(rest.iter().cloned()))
}

/// Weakest precondition of loop-free deterministic code run on `side`.
fn wp(c: &Command, side: Side, q: Expr) -> Option<Expr> {
    match c {
        Command::Skip => Some(q),
        Command::Assign(x, e) => Some(q.subst(&[(Var::tagged(x, side), e.tag(side))].into())),
        Command::Seq(items) => items.iter().rev().try_fold(q, |acc, s| wp(s, side, acc)),
        Command::If(g, a, b) => {
            let g = g.tag(side);
            let ta = wp(a, side, q.clone())?;
            let tb = wp(b, side, q)?;
            Some(Expr::and(
                Expr::implies(g.clone(), ta),
                Expr::implies(Expr::negate(g), tb),
            ))
        }
        Command::Rand(..) | Command::While(..) => None,
    }
}

fn space_failure(e: SpaceError) -> ObligationResult {
    match e {
        SpaceError::Eval(ref at) => {
            let (reason, left, right) = (e.to_string(), at.left.clone(), at.right.clone());
            ObligationResult::Failed {
                reason,
                counterexample: Some(Counterexample {
                    left,
                    right,
                    sample: None,
                }),
            }
        }
        other => ObligationResult::Indeterminate {
            reason: other.to_string(),
        },
    }
}

fn eval_failure(
    err: EvalError,
    expr: &impl std::fmt::Display,
    m1: &Memory,
    m2: &Memory,
) -> SpaceError {
    SpaceError::Eval(Box::new(EvalAt {
        expr: expr.to_string(),
        left: m1.clone(),
        right: m2.clone(),
        err,
    }))
}

struct Checker<'a> {
    dom: &'a DomainDecl,
    fuel: usize,
    log: Vec<Obligation>,
}

impl<'a> Checker<'a> {
    fn space<'g>(&self, g: &'g Goal) -> Space<'g>
    where
        'a: 'g,
    {
        Space::new(self.dom, &g.decls[0], &g.decls[1])
    }

    fn push(
        &mut self,
        p: &ProofNode,
        path: &str,
        what: &str,
        formula: Option<(Expr, Expr)>,
        result: ObligationResult,
    ) {
        self.log.push(Obligation {
            rule: p.rule(),
            path: path.to_string(),
            what: what.to_string(),
            formula,
            result,
        });
    }

    fn structural(&mut self, p: &ProofNode, path: &str, reason: impl Into<String>) {
        let result = ObligationResult::Failed {
            reason: reason.into(),
            counterexample: None,
        };
        self.push(p, path, "rule applies to the commands", None, result);
    }

    fn typed(&mut self, g: &Goal, p: &ProofNode, path: &str, a: &Expr) -> bool {
        match check_assertion(a, &g.decls[0], &g.decls[1]) {
            Ok(()) => true,
            Err(e) => {
                let result = ObligationResult::Failed {
                    reason: e.to_string(),
                    counterexample: None,
                };
                self.push(p, path, "assertion is well typed", None, result);
                false
            }
        }
    }

    fn entail(&mut self, g: &Goal, p: &ProofNode, path: &str, what: &str, hyp: Expr, concl: Expr) {
        let result = match self.space(g).entails(&hyp, &concl) {
            Ok(Entailment::Syntactic) => ObligationResult::Discharged(Method::Syntactic),
            Ok(Entailment::Checked { pairs }) => {
                ObligationResult::Discharged(Method::Enumerated { pairs })
            }
            Ok(Entailment::Vacuous) => ObligationResult::Discharged(Method::Vacuous),
            Ok(Entailment::Refuted { left, right }) => ObligationResult::Failed {
                reason: "conclusion fails on a pair satisfying the hypothesis".into(),
                counterexample: Some(Counterexample {
                    left,
                    right,
                    sample: None,
                }),
            },
            Err(e) => space_failure(e),
        };
        self.push(p, path, what, Some((hyp, concl)), result);
    }

    fn node(&mut self, g: &Goal, p: &ProofNode, path: &str) {
        match p {
            ProofNode::Skip => {
                if g.cmd.iter().all(|c| *c == Command::Skip) {
                    self.entail(
                        g,
                        p,
                        path,
                        "precondition implies postcondition",
                        g.pre.clone(),
                        g.post.clone(),
                    );
                } else {
                    self.structural(p, path, "both programs must be skip");
                }
            }
            ProofNode::Assign => self.assign(g, p, path, [Side::Left, Side::Right]),
            ProofNode::AssignSide(side) => {
                if g.cmd[1 - slot(*side)] != Command::Skip {
                    self.structural(
                        p,
                        path,
                        format!("program {} must be skip", side.other().index()),
                    );
                } else {
                    self.assign(g, p, path, [*side, *side]);
                }
            }
            ProofNode::Sample { var, bij } => self.sample(g, p, path, var, bij),
            ProofNode::SampleSide(side) => self.sample_side(g, p, path, *side),
            ProofNode::Seq(parts) => self.seq(g, p, path, parts),
            ProofNode::If { then, els } => {
                let (Some((e1, a1, b1, r1)), Some((e2, a2, b2, r2))) =
                    (leading_if(&g.cmd[0]), leading_if(&g.cmd[1]))
                else {
                    return self.structural(p, path, "both programs must start with a conditional");
                };
                let (e1, e2) = (e1.tag(Side::Left), e2.tag(Side::Right));
                self.entail(
                    g,
                    p,
                    path,
                    "guards agree",
                    g.pre.clone(),
                    iff(e1.clone(), e2.clone()),
                );
                let yes = Expr::all([g.pre.clone(), e1.clone(), e2.clone()]);
                let no = Expr::all([g.pre.clone(), Expr::negate(e1), Expr::negate(e2)]);
                let gt = g.with(prefixed(a1, r1), prefixed(a2, r2), yes, g.post.clone());
                let ge = g.with(prefixed(b1, r1), prefixed(b2, r2), no, g.post.clone());
                self.node(&gt, then, &format!("{path}.then"));
                self.node(&ge, els, &format!("{path}.else"));
            }
            ProofNode::IfSide { side, then, els } => {
                let s = slot(*side);
                let Some((e, a, b, rest)) = leading_if(&g.cmd[s]) else {
                    return self.structural(
                        p,
                        path,
                        format!("program {} must start with a conditional", side.index()),
                    );
                };
                let e = e.tag(*side);
                let mut gt = g.conditions(Expr::and(g.pre.clone(), e.clone()), g.post.clone());
                gt.cmd[s] = prefixed(a, rest);
                let mut ge =
                    g.conditions(Expr::and(g.pre.clone(), Expr::negate(e)), g.post.clone());
                ge.cmd[s] = prefixed(b, rest);
                self.node(&gt, then, &format!("{path}.then"));
                self.node(&ge, els, &format!("{path}.else"));
            }
            ProofNode::While { inv, body } => {
                let (Some((e1, b1)), Some((e2, b2))) =
                    (single_while(&g.cmd[0]), single_while(&g.cmd[1]))
                else {
                    return self.structural(p, path, "both programs must be a single loop");
                };
                if !self.typed(g, p, path, inv) {
                    return;
                }
                let (e1, e2) = (e1.tag(Side::Left), e2.tag(Side::Right));
                self.entail(
                    g,
                    p,
                    path,
                    "invariant holds on entry",
                    g.pre.clone(),
                    inv.clone(),
                );
                self.entail(
                    g,
                    p,
                    path,
                    "guards agree under the invariant",
                    inv.clone(),
                    iff(e1.clone(), e2.clone()),
                );
                let exit = Expr::all([
                    inv.clone(),
                    Expr::negate(e1.clone()),
                    Expr::negate(e2.clone()),
                ]);
                self.entail(
                    g,
                    p,
                    path,
                    "invariant and exit imply the postcondition",
                    exit,
                    g.post.clone(),
                );
                let inner = g.with(
                    b1.clone(),
                    b2.clone(),
                    Expr::all([inv.clone(), e1, e2]),
                    inv.clone(),
                );
                self.node(&inner, body, &format!("{path}.body"));
            }
            ProofNode::WhileSide {
                side,
                inv,
                fuel,
                body,
            } => self.while_side(g, p, path, *side, inv, *fuel, body),
            ProofNode::Case { split, yes, no } => {
                if !self.typed(g, p, path, split) {
                    return;
                }
                let gy = g.conditions(Expr::and(g.pre.clone(), split.clone()), g.post.clone());
                let gn = g.conditions(
                    Expr::and(g.pre.clone(), Expr::negate(split.clone())),
                    g.post.clone(),
                );
                self.node(&gy, yes, &format!("{path}.yes"));
                self.node(&gn, no, &format!("{path}.no"));
            }
            ProofNode::Conseq { pre, post, inner } => {
                let pre2 = pre.clone().unwrap_or_else(|| g.pre.clone());
                let post2 = post.clone().unwrap_or_else(|| g.post.clone());
                if !self.typed(g, p, path, &pre2) || !self.typed(g, p, path, &post2) {
                    return;
                }
                self.entail(
                    g,
                    p,
                    path,
                    "precondition is strengthened",
                    g.pre.clone(),
                    pre2.clone(),
                );
                self.entail(
                    g,
                    p,
                    path,
                    "postcondition is weakened",
                    post2.clone(),
                    g.post.clone(),
                );
                self.node(&g.conditions(pre2, post2), inner, &format!("{path}.proof"));
            }
            ProofNode::Equiv {
                side,
                transform,
                path: at,
                inner,
            } => self.equiv(g, p, path, *side, transform, at, inner),
        }
    }

    fn assign(&mut self, g: &Goal, p: &ProofNode, path: &str, sides: [Side; 2]) {
        let mut q = g.post.clone();
        for side in [Side::Right, Side::Left] {
            if !sides.contains(&side) {
                continue;
            }
            match wp(&g.cmd[slot(side)], side, q) {
                Some(w) => q = w,
                None => {
                    return self.structural(
                        p,
                        path,
                        format!(
                            "program {} is not loop-free deterministic code",
                            side.index()
                        ),
                    )
                }
            }
        }
        self.entail(
            g,
            p,
            path,
            "precondition implies the weakest precondition",
            g.pre.clone(),
            q,
        );
    }

    fn sample(&mut self, g: &Goal, p: &ProofNode, path: &str, var: &str, bij: &Expr) {
        let (Some((x, d1)), Some((y, d2))) = (single_rand(&g.cmd[0]), single_rand(&g.cmd[1]))
        else {
            return self.structural(p, path, "both programs must be a single sampling");
        };
        let (d1, d2) = (d1.tag(Side::Left), d2.tag(Side::Right));
        let (xv, yv) = (Var::tagged(x, Side::Left), Var::tagged(y, Side::Right));
        let mut extra: BTreeSet<Var> = d1.free_vars().into_iter().chain(d2.free_vars()).collect();
        extra.extend(tagged_vars(bij));
        extra.extend(
            tagged_vars(&g.post)
                .into_iter()
                .filter(|v| *v != xv && *v != yv),
        );
        extra.retain(|v| v.side.is_some());
        let mut failure: Option<(String, Option<Value>)> = None;
        let search = self
            .space(g)
            .search::<SpaceError, _>(&g.pre, &extra, |m1, m2| {
                let env = Env::relational(m1, m2);
                let mu1 = eval_dist_in(&env, &d1).map_err(|e| eval_failure(e, &d1, m1, m2))?;
                let mu2 = eval_dist_in(&env, &d2).map_err(|e| eval_failure(e, &d2, m1, m2))?;
                let mut image = BTreeSet::new();
                let mut pairs = Vec::new();
                let mut covered = BigRational::zero();
                for (v, pv) in mu1.iter() {
                    let w = eval(&env.clone().bind(var, v.clone()), bij)
                        .map_err(|e| eval_failure(e, bij, m1, m2))?;
                    if !image.insert(w.clone()) {
                        failure = Some((
                            format!("bijection is not injective: it maps two samples to {w}"),
                            Some(v.clone()),
                        ));
                        return Ok(false);
                    }
                    let qw = mu2.prob(&w);
                    if qw != *pv {
                        failure = Some((
                            format!("d1({v}) = {pv} differs from d2({w}) = {qw}"),
                            Some(v.clone()),
                        ));
                        return Ok(false);
                    }
                    covered += qw.ratio();
                    pairs.push((v.clone(), w));
                }
                if covered != mu2.mass() {
                    failure = Some((
                        "the bijection misses part of the second distribution".into(),
                        None,
                    ));
                    return Ok(false);
                }
                for (v, w) in pairs {
                    let mut n1 = m1.clone();
                    n1.insert(x.clone(), v.clone());
                    let mut n2 = m2.clone();
                    n2.insert(y.clone(), w);
                    let ok = eval_assertion(&n1, &n2, &g.post)
                        .map_err(|e| eval_failure(e, &g.post, &n1, &n2))?;
                    if !ok {
                        failure = Some((
                            "postcondition fails after coupling this sample".into(),
                            Some(v),
                        ));
                        return Ok(false);
                    }
                }
                Ok(true)
            });
        let result = self.sampled(search, failure);
        self.push(
            p,
            path,
            "coupled samples satisfy the postcondition",
            None,
            result,
        );
    }

    fn sample_side(&mut self, g: &Goal, p: &ProofNode, path: &str, side: Side) {
        let s = slot(side);
        let Some((x, d)) = single_rand(&g.cmd[s]) else {
            return self.structural(
                p,
                path,
                format!("program {} must be a single sampling", side.index()),
            );
        };
        if g.cmd[1 - s] != Command::Skip {
            return self.structural(
                p,
                path,
                format!("program {} must be skip", side.other().index()),
            );
        }
        let d = d.tag(side);
        let xv = Var::tagged(x, side);
        let mut extra: BTreeSet<Var> = d.free_vars();
        extra.extend(tagged_vars(&g.post).into_iter().filter(|v| *v != xv));
        extra.retain(|v| v.side.is_some());
        let mut failure: Option<(String, Option<Value>)> = None;
        let search = self
            .space(g)
            .search::<SpaceError, _>(&g.pre, &extra, |m1, m2| {
                let mu = eval_dist_in(&Env::relational(m1, m2), &d)
                    .map_err(|e| eval_failure(e, &d, m1, m2))?;
                if !mu.is_lossless() {
                    failure = Some((format!("sampled distribution has mass {}", mu.mass()), None));
                    return Ok(false);
                }
                for v in mu.support() {
                    let mut m = [m1.clone(), m2.clone()];
                    m[s].insert(x.clone(), v.clone());
                    let ok = eval_assertion(&m[0], &m[1], &g.post)
                        .map_err(|e| eval_failure(e, &g.post, &m[0], &m[1]))?;
                    if !ok {
                        failure = Some((
                            "postcondition fails for this sample".into(),
                            Some(v.clone()),
                        ));
                        return Ok(false);
                    }
                }
                Ok(true)
            });
        let result = self.sampled(search, failure);
        self.push(
            p,
            path,
            "every sample satisfies the postcondition",
            None,
            result,
        );
    }

    fn sampled(
        &self,
        search: Result<super::space::Search, SpaceError>,
        failure: Option<(String, Option<Value>)>,
    ) -> ObligationResult {
        use super::space::Search;
        match search {
            Ok(Search::Done { pairs }) => {
                ObligationResult::Discharged(Method::Enumerated { pairs })
            }
            Ok(Search::Vacuous) => ObligationResult::Discharged(Method::Vacuous),
            Ok(Search::Stopped { left, right }) => {
                let (reason, sample) = failure.unwrap_or_else(|| ("rejected".into(), None));
                ObligationResult::Failed {
                    reason,
                    counterexample: Some(Counterexample {
                        left,
                        right,
                        sample,
                    }),
                }
            }
            Err(e) => space_failure(e),
        }
    }

    fn seq(&mut self, g: &Goal, p: &ProofNode, path: &str, parts: &[SeqPart]) {
        if parts.is_empty() {
            return self.structural(p, path, "a sequence needs at least one part");
        }
        let stmts = [g.cmd[0].statements(), g.cmd[1].statements()];
        let mut at = [0usize, 0usize];
        let mut pre = g.pre.clone();
        for (k, part) in parts.iter().enumerate() {
            let last = k + 1 == parts.len();
            let mut take = [0usize; 2];
            for s in 0..2 {
                let want = if s == 0 { part.left } else { part.right };
                let avail = stmts[s].len() - at[s];
                take[s] = match want {
                    Some(n) if n <= avail && (!last || n == avail) => n,
                    Some(n) => {
                        return self.structural(
                            p,
                            path,
                            format!(
                                "part {k} takes {n} statements of program {} but {avail} remain",
                                s + 1
                            ),
                        )
                    }
                    None if last => avail,
                    None => {
                        return self.structural(
                            p,
                            path,
                            format!("part {k} must give statement counts"),
                        )
                    }
                };
            }
            let post = match (&part.mid, last) {
                (None, true) => g.post.clone(),
                (Some(_), true) => {
                    return self.structural(
                        p,
                        path,
                        "the last part ends in the goal's postcondition",
                    )
                }
                (Some(mid), false) => {
                    if !self.typed(g, p, path, mid) {
                        return;
                    }
                    mid.clone()
                }
                (None, false) => {
                    return self.structural(p, path, format!("part {k} needs a midpoint assertion"))
                }
            };
            let c1 = Command::from_statements(&stmts[0][at[0]..at[0] + take[0]]);
            let c2 = Command::from_statements(&stmts[1][at[1]..at[1] + take[1]]);
            let sub = g.with(c1, c2, pre, post.clone());
            self.node(&sub, &part.proof, &format!("{path}.parts[{k}]"));
            pre = post;
            at[0] += take[0];
            at[1] += take[1];
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn while_side(
        &mut self,
        g: &Goal,
        p: &ProofNode,
        path: &str,
        side: Side,
        inv: &Expr,
        fuel: Option<usize>,
        body: &ProofNode,
    ) {
        let s = slot(side);
        let Some((e, b)) = single_while(&g.cmd[s]) else {
            return self.structural(
                p,
                path,
                format!("program {} must be a single loop", side.index()),
            );
        };
        if g.cmd[1 - s] != Command::Skip {
            return self.structural(
                p,
                path,
                format!("program {} must be skip", side.other().index()),
            );
        }
        if !self.typed(g, p, path, inv) {
            return;
        }
        let e = e.tag(side);
        self.entail(
            g,
            p,
            path,
            "invariant holds on entry",
            g.pre.clone(),
            inv.clone(),
        );
        let exit = Expr::and(inv.clone(), Expr::negate(e.clone()));
        self.entail(
            g,
            p,
            path,
            "invariant and exit imply the postcondition",
            exit,
            g.post.clone(),
        );

        let fuel = fuel.unwrap_or(self.fuel);
        let lp = &g.cmd[s];
        let result = match self.space(g).projections(&g.pre, side, &lp.live_in()) {
            Err(e) => space_failure(e),
            Ok(mems) => match is_lossless(lp, &mems, fuel) {
                Ok(Lossless::Yes) => ObligationResult::Discharged(Method::Enumerated {
                    pairs: mems.len() as u64,
                }),
                Ok(Lossless::No(m)) => ObligationResult::Failed {
                    reason: "loop loses mass".into(),
                    counterexample: Some(one_sided(side, m)),
                },
                Ok(Lossless::Unknown(m)) => ObligationResult::Indeterminate {
                    reason: format!(
                        "loop not finished after {fuel} iterations from {}",
                        show_memory(&m)
                    ),
                },
                Err(err) => ObligationResult::Failed {
                    reason: err.to_string(),
                    counterexample: None,
                },
            },
        };
        self.push(p, path, "loop is lossless", None, result);

        let mut inner = g.conditions(Expr::and(inv.clone(), e), inv.clone());
        inner.cmd[s] = b.clone();
        self.node(&inner, body, &format!("{path}.body"));
    }

    #[allow(clippy::too_many_arguments)]
    fn equiv(
        &mut self,
        g: &Goal,
        p: &ProofNode,
        path: &str,
        side: Side,
        t: &crate::pwhile::Transform,
        at: &[usize],
        inner: &ProofNode,
    ) {
        let s = slot(side);
        let t = match t.map_exprs(|e| e.untag(side)) {
            Ok(t) => t,
            Err(msg) => return self.structural(p, path, msg),
        };
        let rw = match rewrite(&g.cmd[s], &g.decls[s], &t, at) {
            Ok(rw) => rw,
            Err(e) => return self.structural(p, path, e.to_string()),
        };
        let touched: BTreeSet<Var> = tagged_vars(&g.pre)
            .into_iter()
            .chain(tagged_vars(&g.post))
            .collect();
        let clash = side_vars(&rw.scratch, side)
            .into_iter()
            .find(|v| touched.contains(v));
        if let Some(v) = clash {
            return self.structural(
                p,
                path,
                format!("{v} is introduced by the rewrite but used by the assertions"),
            );
        }
        let live: BTreeSet<String> = g.cmd[s]
            .live_in()
            .into_iter()
            .chain(rw.command.live_in())
            .collect();
        // The rewrite only swaps statements that touch disjoint variables.
        let result = if matches!(t, crate::pwhile::Transform::SwapAdjacent) {
            ObligationResult::Discharged(Method::Syntactic)
        } else {
            self.equiv_semantic(g, side, &t, &rw, &live)
        };
        self.push(p, path, "rewrite preserves the semantics", None, result);
        let mut next = g.clone();
        next.cmd[s] = rw.command;
        next.decls[s] = rw.decls;
        self.node(&next, inner, &format!("{path}.proof"));
    }

    fn equiv_semantic(
        &self,
        g: &Goal,
        side: Side,
        t: &crate::pwhile::Transform,
        rw: &crate::pwhile::Rewrite,
        live: &BTreeSet<String>,
    ) -> ObligationResult {
        let s = slot(side);
        match self.space(g).projections(&g.pre, side, live) {
            Err(e) => space_failure(e),
            Ok(mems) => {
                match equivalent_except(&g.cmd[s], &rw.command, &mems, &rw.scratch, self.fuel) {
                    Ok(Equivalence::Equal) => ObligationResult::Discharged(Method::Enumerated {
                        pairs: mems.len() as u64,
                    }),
                    Ok(Equivalence::Differs { memory, .. }) => ObligationResult::Failed {
                        reason: format!("{} changes the output distribution", t.name()),
                        counterexample: Some(one_sided(side, memory)),
                    },
                    Ok(Equivalence::Indeterminate { memory }) => ObligationResult::Indeterminate {
                        reason: format!(
                            "loop not finished after {} iterations from {}",
                            self.fuel,
                            show_memory(&memory)
                        ),
                    },
                    Err(err) => ObligationResult::Failed {
                        reason: err.to_string(),
                        counterexample: None,
                    },
                }
            }
        }
    }
}

fn one_sided(side: Side, m: Memory) -> Counterexample {
    match side {
        Side::Left => Counterexample {
            left: m,
            right: Memory::new(),
            sample: None,
        },
        Side::Right => Counterexample {
            left: Memory::new(),
            right: m,
            sample: None,
        },
    }
}

fn show_memory(m: &Memory) -> String {
    let items: Vec<String> = m.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    format!("{{{}}}", items.join(", "))
}

/// Checks every obligation of the proof; the verdict lists them all, in
/// proof order.
pub fn check(j: &Judgment, proof: &ProofNode, dom: &DomainDecl, fuel: usize) -> Verdict {
    let mut c = Checker {
        dom,
        fuel,
        log: Vec::new(),
    };
    if let Err(errors) = j.typecheck() {
        for e in errors {
            let result = ObligationResult::Failed {
                reason: e.to_string(),
                counterexample: None,
            };
            c.log.push(Obligation {
                rule: "judgment".into(),
                path: "judgment".into(),
                what: "programs and assertions are well typed".into(),
                formula: None,
                result,
            });
        }
        return Verdict { obligations: c.log };
    }
    let g = Goal {
        cmd: [j.left.body.clone(), j.right.body.clone()],
        decls: [j.left.decls.clone(), j.right.decls.clone()],
        pre: j.pre.clone(),
        post: j.post.clone(),
    };
    c.node(&g, proof, "proof");
    Verdict { obligations: c.log }
}

/// Checks the proof and, when every obligation is discharged, returns the
/// verified judgment.
pub fn check_proof(
    j: &Judgment,
    proof: &ProofNode,
    dom: &DomainDecl,
    fuel: usize,
) -> Result<VerifiedJudgment, Verdict> {
    let verdict = check(j, proof, dom, fuel);
    match verdict.status() {
        Status::Accepted => Ok(VerifiedJudgment {
            judgment: j.clone(),
            proof: proof.clone(),
            verdict,
        }),
        _ => Err(verdict),
    }
}
