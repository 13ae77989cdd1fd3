//! Enumeration of memory pairs over finite domains.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dist::Value;
use crate::pwhile::ast::{BinOp, Decls, Expr, Side, Type, Var};
use crate::pwhile::eval::{eval_assertion, Env};
use crate::pwhile::{Domain, DomainDecl, DomainError, EvalError, Memory};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("enumeration exceeded the cap of {cap} assignments")]
    Capacity { cap: u64 },
    #[error("evaluating `{}` at {}: {}", .0.expr, show_pair(&.0.left, &.0.right), .0.err)]
    Eval(Box<EvalAt>),
}

/// An assertion that failed to evaluate, with the pair it was evaluated at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalAt {
    pub expr: String,
    pub left: Memory,
    pub right: Memory,
    pub err: EvalError,
}

impl SpaceError {
    /// Whether the failure is about the size or coverage of the domains
    /// rather than about the assertions themselves.
    pub fn is_capacity(&self) -> bool {
        matches!(self, SpaceError::Capacity { .. } | SpaceError::Domain(_))
    }
}

/// Renders a memory pair as `{x#1 = 0, y#2 = 1}`.
pub fn show_pair(m1: &Memory, m2: &Memory) -> String {
    let mut s = String::from("{");
    let entries = m1
        .iter()
        .map(|(k, v)| (k, 1, v))
        .chain(m2.iter().map(|(k, v)| (k, 2, v)));
    for (i, (k, side, v)) in entries.enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{k}#{side} = {v}");
    }
    s.push('}');
    s
}

/// Tagged free variables of an expression.
pub fn tagged_vars(e: &Expr) -> BTreeSet<Var> {
    e.free_vars()
        .into_iter()
        .filter(|v| v.side.is_some())
        .collect()
}

pub fn side_vars<'a, I: IntoIterator<Item = &'a String>>(names: I, side: Side) -> BTreeSet<Var> {
    names.into_iter().map(|n| Var::tagged(n, side)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search {
    /// Every pair satisfying the hypothesis was visited.
    Done { pairs: u64 },
    /// The hypothesis has no satisfying pair.
    Vacuous,
    /// The visitor stopped at this pair.
    Stopped { left: Memory, right: Memory },
}

/// Variable domains for both sides of a judgment.
#[derive(Clone, Copy, Debug)]
pub struct Space<'a> {
    pub dom: &'a DomainDecl,
    pub left: &'a Decls,
    pub right: &'a Decls,
}

enum Step {
    Solve(Expr, Option<Domain>),
    Enumerate(Vec<Value>),
}

struct Plan<'e> {
    order: Vec<(Var, Step)>,
    checks: Vec<Vec<&'e Expr>>,
}

fn domain_of_type(ty: &Type, decls: &Decls) -> Option<Domain> {
    match ty {
        Type::Bool => Some(Domain::Bool),
        Type::Enum(name) => decls.enums.get(name).map(|vs| Domain::Enum(vs.clone())),
        Type::Tuple(ts) => ts
            .iter()
            .map(|t| domain_of_type(t, decls))
            .collect::<Option<_>>()
            .map(Domain::Tuple),
        _ => None,
    }
}

fn eval_err(e: &Expr, m: &[Memory; 2], err: EvalError) -> SpaceError {
    SpaceError::Eval(Box::new(EvalAt {
        expr: e.to_string(),
        left: m[0].clone(),
        right: m[1].clone(),
        err,
    }))
}

fn holds(e: &Expr, m: &[Memory; 2]) -> Result<bool, SpaceError> {
    eval_assertion(&m[0], &m[1], e).map_err(|err| eval_err(e, m, err))
}

fn slot(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

impl<'a> Space<'a> {
    pub fn new(dom: &'a DomainDecl, left: &'a Decls, right: &'a Decls) -> Self {
        Space { dom, left, right }
    }

    fn decls(&self, side: Side) -> &'a Decls {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    /// The declared domain of a tagged variable; finite types (booleans,
    /// enums and tuples of those) need no declaration.
    pub fn domain(&self, v: &Var) -> Option<Domain> {
        let side = v.side?;
        let decls = self.decls(side);
        self.dom
            .get(Some(side), &v.name)
            .cloned()
            .or_else(|| decls.domains.get(&v.name).cloned())
            .or_else(|| {
                decls
                    .vars
                    .get(&v.name)
                    .and_then(|t| domain_of_type(t, decls))
            })
    }

    fn plan<'e>(
        &self,
        vars: &BTreeSet<Var>,
        conjs: &[(&'e Expr, BTreeSet<Var>)],
    ) -> Result<Plan<'e>, SpaceError> {
        let mut assigned: BTreeSet<Var> = BTreeSet::new();
        let mut order = Vec::new();
        let solvable = |c: &Expr, assigned: &BTreeSet<Var>| -> Option<(Var, Expr)> {
            let Expr::Binary(BinOp::Eq, a, b) = c else {
                return None;
            };
            let try_side = |x: &Expr, e: &Expr| match x {
                Expr::Var(v) if v.side.is_some() && vars.contains(v) && !assigned.contains(v) => {
                    let fv = e.free_vars();
                    (fv.iter().all(|w| assigned.contains(w))).then(|| (v.clone(), e.clone()))
                }
                _ => None,
            };
            try_side(a, b).or_else(|| try_side(b, a))
        };
        // Variables with a defining equation are left for `solvable` when
        // possible.
        let definable: BTreeSet<&Var> = conjs
            .iter()
            .filter_map(|(c, _)| match c {
                Expr::Binary(BinOp::Eq, a, b) => Some([(a, b), (b, a)]),
                _ => None,
            })
            .flatten()
            .filter_map(|(x, e)| match &**x {
                Expr::Var(v) if vars.contains(v) && !e.free_vars().contains(v) => Some(v),
                _ => None,
            })
            .collect();
        while order.len() < vars.len() {
            if let Some((x, e)) = conjs.iter().find_map(|(c, _)| solvable(c, &assigned)) {
                let d = self.domain(&x);
                assigned.insert(x.clone());
                order.push((x, Step::Solve(e, d)));
                continue;
            }
            let mut best: Option<(bool, usize, u128, &Var)> = None;
            let mut undeclared = None;
            for x in vars.iter().filter(|x| !assigned.contains(*x)) {
                // A variable without a domain can still be solved for later.
                let Some(size) = self.domain(x).map(|d| d.size()) else {
                    undeclared.get_or_insert(x);
                    continue;
                };
                let completes = conjs
                    .iter()
                    .filter(|(_, vs)| {
                        vs.contains(x) && vs.iter().all(|w| w == x || assigned.contains(w))
                    })
                    .count();
                let deferred = definable.contains(x);
                let better = match best {
                    None => true,
                    Some((d, c, s, _)) => {
                        (!deferred && d)
                            || (deferred == d && (completes > c || (completes == c && size < s)))
                    }
                };
                if better {
                    best = Some((deferred, completes, size, x));
                }
            }
            let Some((_, _, size, x)) = best else {
                let x = undeclared.expect("an unassigned variable remains");
                return Err(DomainError::Missing(x.to_string()).into());
            };
            let x = x.clone();
            self.dom
                .check_size(size)
                .map_err(|_| SpaceError::Capacity { cap: self.dom.cap })?;
            let values = self.domain(&x).expect("checked above").values();
            assigned.insert(x.clone());
            order.push((x, Step::Enumerate(values)));
        }
        let mut checks: Vec<Vec<&Expr>> = vec![Vec::new(); order.len()];
        for (c, vs) in conjs {
            let pos = vs
                .iter()
                .map(|v| {
                    order
                        .iter()
                        .position(|(x, _)| x == v)
                        .expect("conjunct variables are planned")
                })
                .max()
                .expect("open conjuncts mention variables");
            checks[pos].push(c);
        }
        Ok(Plan { order, checks })
    }

    fn dfs<E, F>(
        &self,
        plan: &Plan<'_>,
        pos: usize,
        m: &mut [Memory; 2],
        count: &mut u64,
        visit: &mut F,
    ) -> Result<bool, E>
    where
        E: From<SpaceError>,
        F: FnMut(&Memory, &Memory) -> Result<bool, E>,
    {
        if pos == plan.order.len() {
            return visit(&m[0], &m[1]);
        }
        let (var, step) = &plan.order[pos];
        let side = slot(var.side.expect("planned variables are tagged"));
        let solved;
        let candidates: &[Value] = match step {
            Step::Enumerate(values) => values,
            Step::Solve(e, d) => {
                let env = Env::relational(&m[0], &m[1]);
                let v = crate::pwhile::eval::eval(&env, e).map_err(|err| eval_err(e, m, err))?;
                if d.as_ref().is_some_and(|d| !d.contains(&v)) {
                    return Ok(true);
                }
                solved = [v];
                &solved
            }
        };
        for v in candidates {
            *count += 1;
            if *count > self.dom.cap {
                return Err(SpaceError::Capacity { cap: self.dom.cap }.into());
            }
            m[side].insert(var.name.clone(), v.clone());
            let mut ok = true;
            for c in &plan.checks[pos] {
                if !holds(c, m)? {
                    ok = false;
                    break;
                }
            }
            let go_on = if ok {
                self.dfs(plan, pos + 1, m, count, visit)?
            } else {
                true
            };
            m[side].remove(&var.name);
            if !go_on {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn backtrack<E, F>(
        &self,
        vars: &BTreeSet<Var>,
        conjs: &[(&Expr, BTreeSet<Var>)],
        visit: &mut F,
    ) -> Result<bool, E>
    where
        E: From<SpaceError>,
        F: FnMut(&Memory, &Memory) -> Result<bool, E>,
    {
        let plan = self.plan(vars, conjs)?;
        let mut m = [Memory::new(), Memory::new()];
        let mut count = 0;
        self.dfs(&plan, 0, &mut m, &mut count, visit)
    }

    /// Visits every assignment of `extra` (and of the hypothesis variables
    /// connected to them) that satisfies `hyp`, until `visit` returns
    /// `false`. Conjuncts of `hyp` sharing no variable with `extra` are only
    /// checked for satisfiability; a stopping pair is completed with one of
    /// their solutions.
    pub fn search<E, F>(&self, hyp: &Expr, extra: &BTreeSet<Var>, mut visit: F) -> Result<Search, E>
    where
        E: From<SpaceError>,
        F: FnMut(&Memory, &Memory) -> Result<bool, E>,
    {
        let empty = [Memory::new(), Memory::new()];
        let mut open = Vec::new();
        for c in hyp.conjuncts() {
            let vs = tagged_vars(c);
            if vs.is_empty() {
                if !holds(c, &empty)? {
                    return Ok(Search::Vacuous);
                }
            } else {
                open.push((c, vs));
            }
        }
        let mut relevant: BTreeSet<Var> =
            extra.iter().filter(|v| v.side.is_some()).cloned().collect();
        let mut used = vec![false; open.len()];
        loop {
            let mut changed = false;
            for (i, (_, vs)) in open.iter().enumerate() {
                if !used[i] && !vs.is_disjoint(&relevant) {
                    used[i] = true;
                    relevant.extend(vs.iter().cloned());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let (rel, irr): (Vec<_>, Vec<_>) = open.into_iter().zip(used).partition(|(_, u)| *u);
        let rel: Vec<_> = rel.into_iter().map(|(c, _)| c).collect();
        let irr: Vec<_> = irr.into_iter().map(|(c, _)| c).collect();

        let mut witness = [Memory::new(), Memory::new()];
        if !irr.is_empty() {
            let vars: BTreeSet<Var> = irr.iter().flat_map(|(_, vs)| vs.iter().cloned()).collect();
            let mut found = None;
            self.backtrack::<SpaceError, _>(&vars, &irr, &mut |m1, m2| {
                found = Some([m1.clone(), m2.clone()]);
                Ok(false)
            })?;
            match found {
                Some(w) => witness = w,
                None => return Ok(Search::Vacuous),
            }
        }

        let mut pairs = 0u64;
        let mut stopped = None;
        self.backtrack(&relevant, &rel, &mut |m1: &Memory,
                                              m2: &Memory|
         -> Result<bool, E> {
            pairs += 1;
            if visit(m1, m2)? {
                Ok(true)
            } else {
                let mut l = witness[0].clone();
                let mut r = witness[1].clone();
                l.extend(m1.iter().map(|(k, v)| (k.clone(), v.clone())));
                r.extend(m2.iter().map(|(k, v)| (k.clone(), v.clone())));
                stopped = Some((l, r));
                Ok(false)
            }
        })?;
        Ok(match stopped {
            Some((left, right)) => Search::Stopped { left, right },
            None if pairs == 0 => Search::Vacuous,
            None => Search::Done { pairs },
        })
    }

    /// All pairs over `vars` satisfying `hyp`.
    pub fn pairs(
        &self,
        hyp: &Expr,
        vars: &BTreeSet<Var>,
    ) -> Result<Vec<(Memory, Memory)>, SpaceError> {
        let mut out = Vec::new();
        self.search::<SpaceError, _>(hyp, vars, |m1, m2| {
            out.push((m1.clone(), m2.clone()));
            Ok(true)
        })?;
        Ok(out)
    }

    /// Distinct memories of one side among the pairs satisfying `hyp`,
    /// covering at least `vars` of that side.
    pub fn projections<'n, I>(
        &self,
        hyp: &Expr,
        side: Side,
        names: I,
    ) -> Result<Vec<Memory>, SpaceError>
    where
        I: IntoIterator<Item = &'n String>,
    {
        let vars = side_vars(names, side);
        let mut out = BTreeSet::new();
        self.search::<SpaceError, _>(hyp, &vars, |m1, m2| {
            out.insert(if side == Side::Left {
                m1.clone()
            } else {
                m2.clone()
            });
            Ok(true)
        })?;
        Ok(out.into_iter().collect())
    }

    /// Decides `hyp ==> concl` over the domains.
    pub fn entails(&self, hyp: &Expr, concl: &Expr) -> Result<Entailment, SpaceError> {
        let known: HashSet<&Expr> = hyp.conjuncts().into_iter().collect();
        let rest: Vec<&Expr> = concl
            .conjuncts()
            .into_iter()
            .filter(|c| !known.contains(c))
            .collect();
        if rest.is_empty() {
            return Ok(Entailment::Syntactic);
        }
        let vars: BTreeSet<Var> = rest.iter().flat_map(|c| tagged_vars(c)).collect();
        let search = self.search::<SpaceError, _>(hyp, &vars, |m1, m2| {
            let m = [m1.clone(), m2.clone()];
            for c in &rest {
                if !holds(c, &m)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        Ok(match search {
            Search::Done { pairs } => Entailment::Checked { pairs },
            Search::Vacuous => Entailment::Vacuous,
            Search::Stopped { left, right } => Entailment::Refuted { left, right },
        })
    }

    /// Validity of an assertion; a top-level implication is read as a
    /// hypothesis and a conclusion.
    pub fn validity_check(&self, a: &Expr) -> Result<Entailment, SpaceError> {
        match a {
            Expr::Binary(BinOp::Implies, h, c) => self.entails(h, c),
            other => self.entails(&Expr::bool(true), other),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment {
    /// Every conclusion conjunct is a hypothesis conjunct.
    Syntactic,
    Checked {
        pairs: u64,
    },
    /// No pair satisfies the hypothesis.
    Vacuous,
    Refuted {
        left: Memory,
        right: Memory,
    },
}

impl Entailment {
    pub fn holds(&self) -> bool {
        !matches!(self, Entailment::Refuted { .. })
    }
}
