use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed};
use thiserror::Error;

use super::ast::{BinOp, Command, Decls, DistExpr, Expr, Program, Quant, Side, Type, UnOp, Var};
use super::functions;
use crate::dist::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{site}: {msg}")]
pub struct TypeError {
    pub site: String,
    pub msg: String,
}

/// Variable typing for one expression: untagged names resolve in `plain`,
/// tagged names in `left`/`right`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Scope<'a> {
    pub plain: Option<&'a Decls>,
    pub left: Option<&'a Decls>,
    pub right: Option<&'a Decls>,
}

impl<'a> Scope<'a> {
    pub fn program(d: &'a Decls) -> Scope<'a> {
        Scope {
            plain: Some(d),
            ..Scope::default()
        }
    }

    pub fn relational(d1: &'a Decls, d2: &'a Decls) -> Scope<'a> {
        Scope {
            left: Some(d1),
            right: Some(d2),
            ..Scope::default()
        }
    }

    fn decls_for(&self, side: Option<Side>) -> Option<&'a Decls> {
        match side {
            None => self.plain,
            Some(Side::Left) => self.left,
            Some(Side::Right) => self.right,
        }
    }

    fn enum_type(&self, variant: &str) -> Option<String> {
        [self.plain, self.left, self.right]
            .into_iter()
            .flatten()
            .find_map(|d| d.enum_of(variant).map(str::to_string))
    }
}

/// Least common supertype (ints widen to rationals, vectors absorb
/// homogeneous tuples), if any.
pub fn join(a: &Type, b: &Type) -> Option<Type> {
    match (a, b) {
        _ if a == b => Some(a.clone()),
        (Type::Any, t) | (t, Type::Any) => Some(t.clone()),
        (Type::Int, Type::Rat) | (Type::Rat, Type::Int) => Some(Type::Rat),
        (Type::List(x), Type::List(y)) => Some(Type::List(Box::new(join(x, y)?))),
        (Type::Vec(x), Type::Vec(y)) => Some(Type::Vec(Box::new(join(x, y)?))),
        (Type::Vec(e), Type::Tuple(ts)) | (Type::Tuple(ts), Type::Vec(e)) => {
            let mut acc = (**e).clone();
            for t in ts {
                acc = join(&acc, t)?;
            }
            Some(Type::Vec(Box::new(acc)))
        }
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => Some(Type::Tuple(
            xs.iter()
                .zip(ys)
                .map(|(x, y)| join(x, y))
                .collect::<Option<_>>()?,
        )),
        _ => None,
    }
}

/// Whether a value of type `actual` may be stored in a variable of type
/// `declared`.
pub fn assignable(declared: &Type, actual: &Type) -> bool {
    join(declared, actual).as_ref() == Some(declared)
}

fn numeric(t: &Type) -> bool {
    matches!(t, Type::Int | Type::Rat)
}

fn int_vector(t: &Type) -> bool {
    match t {
        Type::Vec(e) => **e == Type::Int,
        Type::Tuple(ts) => !ts.is_empty() && ts.iter().all(|t| *t == Type::Int),
        _ => false,
    }
}

pub fn value_type(v: &Value, scope: &Scope<'_>) -> Result<Type, String> {
    Ok(match v {
        Value::Int(_) => Type::Int,
        Value::Bool(_) => Type::Bool,
        Value::Rat(_) => Type::Rat,
        Value::Enum(name) => Type::Enum(
            scope
                .enum_type(name)
                .ok_or_else(|| format!("unknown identifier {name}"))?,
        ),
        Value::Tuple(xs) => Type::Tuple(
            xs.iter()
                .map(|x| value_type(x, scope))
                .collect::<Result<_, _>>()?,
        ),
        Value::List(xs) => {
            let mut acc = Type::Any;
            for x in xs {
                let t = value_type(x, scope)?;
                acc = join(&acc, &t).ok_or_else(|| format!("heterogeneous list {v}"))?;
            }
            Type::List(Box::new(acc))
        }
    })
}

pub fn type_of(e: &Expr, scope: &Scope<'_>) -> Result<Type, String> {
    infer(e, scope, &mut Vec::new())
}

fn infer(e: &Expr, scope: &Scope<'_>, bound: &mut Vec<String>) -> Result<Type, String> {
    let rec = |x: &Expr, bound: &mut Vec<String>| infer(x, scope, bound);
    match e {
        Expr::Lit(v) => value_type(v, scope),
        Expr::Var(Var { name, side }) => {
            if side.is_none() && bound.contains(name) {
                return Ok(Type::Int);
            }
            scope
                .decls_for(*side)
                .and_then(|d| d.vars.get(name))
                .cloned()
                .ok_or_else(|| {
                    format!(
                        "unknown variable {}",
                        Var {
                            name: name.clone(),
                            side: *side
                        }
                    )
                })
        }
        Expr::Unary(UnOp::Not, a) => match rec(a, bound)? {
            Type::Bool => Ok(Type::Bool),
            t => Err(format!("negation of {t}")),
        },
        Expr::Unary(UnOp::Neg, a) => match rec(a, bound)? {
            t if numeric(&t) || int_vector(&t) => Ok(t),
            t => Err(format!("arithmetic negation of {t}")),
        },
        Expr::Binary(op, a, b) => {
            let (ta, tb) = (rec(a, bound)?, rec(b, bound)?);
            let mismatch = || format!("operator {} on {ta} and {tb}", op.symbol());
            match op {
                BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff => {
                    if ta == Type::Bool && tb == Type::Bool {
                        Ok(Type::Bool)
                    } else {
                        Err(mismatch())
                    }
                }
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    join(&ta, &tb).map(|_| Type::Bool).ok_or_else(mismatch)
                }
                BinOp::Cons => match &tb {
                    Type::List(el) => join(el, &ta)
                        .map(|t| Type::List(Box::new(t)))
                        .ok_or_else(mismatch),
                    _ => Err(mismatch()),
                },
                BinOp::Add | BinOp::Sub => {
                    if numeric(&ta) && numeric(&tb) || int_vector(&ta) && int_vector(&tb) {
                        join(&ta, &tb).ok_or_else(mismatch)
                    } else {
                        Err(mismatch())
                    }
                }
                BinOp::Mul => match (numeric(&ta), numeric(&tb)) {
                    (true, true) => join(&ta, &tb).ok_or_else(mismatch),
                    (false, true) if int_vector(&ta) && tb == Type::Int => Ok(ta.clone()),
                    (true, false) if int_vector(&tb) && ta == Type::Int => Ok(tb.clone()),
                    _ => Err(mismatch()),
                },
                BinOp::Div => {
                    if numeric(&ta) && numeric(&tb) {
                        Ok(Type::Rat)
                    } else {
                        Err(mismatch())
                    }
                }
                BinOp::Mod => {
                    if tb == Type::Int && (ta == Type::Int || int_vector(&ta)) {
                        Ok(ta.clone())
                    } else {
                        Err(mismatch())
                    }
                }
            }
        }
        Expr::Cond(c, a, b) => {
            if rec(c, bound)? != Type::Bool {
                return Err(format!("condition {c} is not boolean"));
            }
            let (ta, tb) = (rec(a, bound)?, rec(b, bound)?);
            join(&ta, &tb).ok_or_else(|| format!("branches have types {ta} and {tb}"))
        }
        Expr::Tuple(xs) => Ok(Type::Tuple(
            xs.iter().map(|x| rec(x, bound)).collect::<Result<_, _>>()?,
        )),
        Expr::List(xs) => {
            let mut acc = Type::Any;
            for x in xs {
                let t = rec(x, bound)?;
                acc = join(&acc, &t).ok_or_else(|| format!("heterogeneous list literal {e}"))?;
            }
            Ok(Type::List(Box::new(acc)))
        }
        Expr::Proj(a, k) => match rec(a, bound)? {
            Type::Tuple(ts) if *k >= 1 && *k <= ts.len() => Ok(ts[*k - 1].clone()),
            Type::Vec(t) => Ok(*t),
            t => Err(format!("projection .{k} on {t}")),
        },
        Expr::Index(a, i) => {
            if rec(i, bound)? != Type::Int {
                return Err(format!("index {i} is not an integer"));
            }
            match rec(a, bound)? {
                Type::Vec(t) | Type::List(t) => Ok(*t),
                Type::Tuple(ts) if !ts.is_empty() => {
                    let mut acc = ts[0].clone();
                    for t in &ts[1..] {
                        acc = join(&acc, t)
                            .ok_or_else(|| format!("indexing a heterogeneous tuple in {e}"))?;
                    }
                    Ok(acc)
                }
                t => Err(format!("indexing into {t}")),
            }
        }
        Expr::Call(name, args) => {
            let f = functions::lookup(name).ok_or_else(|| format!("unknown function {name}"))?;
            if f.arity != args.len() {
                return Err(format!(
                    "{name} expects {} arguments, got {}",
                    f.arity,
                    args.len()
                ));
            }
            let ts = args
                .iter()
                .map(|x| rec(x, bound))
                .collect::<Result<Vec<_>, _>>()?;
            (f.ty)(&ts)
        }
        Expr::Quant(q, x, lo, hi, body) => {
            if rec(lo, bound)? != Type::Int || rec(hi, bound)? != Type::Int {
                return Err("quantifier bounds must be integers".into());
            }
            bound.push(x.clone());
            let t = rec(body, bound);
            bound.pop();
            match t? {
                Type::Bool => Ok(Type::Bool),
                t => Err(format!(
                    "{} body has type {t}",
                    if *q == Quant::Forall {
                        "forall"
                    } else {
                        "exists"
                    }
                )),
            }
        }
    }
}

/// Type of the values a distribution ranges over.
pub fn dist_type(d: &DistExpr, scope: &Scope<'_>) -> Result<Type, String> {
    match d {
        DistExpr::Bern(p) => {
            let t = type_of(p, scope)?;
            if !numeric(&t) {
                return Err(format!("Bern parameter has type {t}"));
            }
            if let Expr::Lit(v) = p {
                let r = v.as_ratio().expect("numeric literal");
                if r.is_negative() || r > BigRational::one() {
                    return Err(format!("Bern parameter {v} is outside [0, 1]"));
                }
            }
            Ok(Type::Bool)
        }
        DistExpr::UniformSet(xs) => {
            let mut acc = Type::Any;
            for x in xs {
                let t = type_of(x, scope)?;
                acc = join(&acc, &t).ok_or_else(|| format!("heterogeneous support in {d}"))?;
            }
            Ok(acc)
        }
        DistExpr::UniformRange(lo, hi) => {
            if type_of(lo, scope)? != Type::Int || type_of(hi, scope)? != Type::Int {
                return Err("range bounds must be integers".into());
            }
            Ok(Type::Int)
        }
        DistExpr::Table(rows) => {
            let mut acc = Type::Any;
            for (v, w) in rows {
                let t = type_of(v, scope)?;
                acc = join(&acc, &t).ok_or_else(|| format!("heterogeneous support in {d}"))?;
                let tw = type_of(w, scope)?;
                if !numeric(&tw) {
                    return Err(format!("weight {w} has type {tw}"));
                }
            }
            Ok(acc)
        }
    }
}

pub fn typecheck(p: &Program) -> Result<(), Vec<TypeError>> {
    let mut errors = Vec::new();
    let scope = Scope::program(&p.decls);
    check_command(&p.body, &p.decls, &scope, &mut errors);
    if let Some(r) = &p.ret {
        if let Err(msg) = type_of(r, &scope) {
            errors.push(TypeError {
                site: format!("return {r}"),
                msg,
            });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

pub fn check_command(c: &Command, decls: &Decls, scope: &Scope<'_>, errors: &mut Vec<TypeError>) {
    let mut push = |site: String, msg: String| errors.push(TypeError { site, msg });
    match c {
        Command::Skip => {}
        Command::Assign(x, e) => {
            let site = format!("{x} := {e}");
            match (decls.vars.get(x), type_of(e, scope)) {
                (None, _) => push(site, format!("unknown variable {x}")),
                (_, Err(m)) => push(site, m),
                (Some(decl), Ok(t)) if !assignable(decl, &t) => {
                    push(site, format!("cannot assign {t} to {x} : {decl}"))
                }
                _ => {}
            }
        }
        Command::Rand(x, d) => {
            let site = format!("{x} ~~ {d}");
            match (decls.vars.get(x), dist_type(d, scope)) {
                (None, _) => push(site, format!("unknown variable {x}")),
                (_, Err(m)) => push(site, m),
                (Some(decl), Ok(t)) if !assignable(decl, &t) => {
                    push(site, format!("cannot sample {t} into {x} : {decl}"))
                }
                _ => {}
            }
        }
        Command::If(e, a, b) => {
            match type_of(e, scope) {
                Ok(Type::Bool) => {}
                Ok(t) => push(format!("if {e}"), format!("guard has type {t}")),
                Err(m) => push(format!("if {e}"), m),
            }
            check_command(a, decls, scope, errors);
            check_command(b, decls, scope, errors);
        }
        Command::While(e, body) => {
            match type_of(e, scope) {
                Ok(Type::Bool) => {}
                Ok(t) => push(format!("while {e}"), format!("guard has type {t}")),
                Err(m) => push(format!("while {e}"), m),
            }
            check_command(body, decls, scope, errors);
        }
        Command::Seq(items) => items
            .iter()
            .for_each(|s| check_command(s, decls, scope, errors)),
    }
}

/// Checks that a relational assertion is a well-typed boolean formula.
pub fn check_assertion(a: &Expr, d1: &Decls, d2: &Decls) -> Result<(), TypeError> {
    match type_of(a, &Scope::relational(d1, d2)) {
        Ok(Type::Bool) => Ok(()),
        Ok(t) => Err(TypeError {
            site: a.to_string(),
            msg: format!("assertion has type {t}"),
        }),
        Err(msg) => Err(TypeError {
            site: a.to_string(),
            msg,
        }),
    }
}

/// Converts an untyped value (for instance decoded from JSON) to the
/// representation of `ty`: ints widen to rationals, arrays become lists
/// where a list is expected.
pub fn coerce(v: &Value, ty: &Type, decls: &Decls) -> Result<Value, String> {
    let bad = || format!("value {v} does not have type {ty}");
    match (ty, v) {
        (Type::Int, Value::Int(_)) | (Type::Bool, Value::Bool(_)) | (Type::Rat, Value::Rat(_)) => {
            Ok(v.clone())
        }
        (Type::Rat, Value::Int(i)) => Ok(Value::Rat(BigRational::from_integer(i.clone()))),
        (Type::Enum(name), Value::Enum(c)) => {
            if decls.enums.get(name).is_some_and(|vs| vs.contains(c)) {
                Ok(v.clone())
            } else {
                Err(bad())
            }
        }
        (Type::Tuple(ts), Value::Tuple(xs)) if ts.len() == xs.len() => Ok(Value::Tuple(
            ts.iter()
                .zip(xs)
                .map(|(t, x)| coerce(x, t, decls))
                .collect::<Result<_, _>>()?,
        )),
        (Type::Vec(t), Value::Tuple(xs)) => Ok(Value::Tuple(
            xs.iter()
                .map(|x| coerce(x, t, decls))
                .collect::<Result<_, _>>()?,
        )),
        (Type::List(t), Value::List(xs) | Value::Tuple(xs)) => Ok(Value::List(
            xs.iter()
                .map(|x| coerce(x, t, decls))
                .collect::<Result<_, _>>()?,
        )),
        (Type::Any, _) => Ok(v.clone()),
        _ => Err(bad()),
    }
}

/// Coerces every entry of a memory to its declared type.
pub fn coerce_memory(
    m: &BTreeMap<String, Value>,
    decls: &Decls,
) -> Result<BTreeMap<String, Value>, String> {
    m.iter()
        .map(|(k, v)| {
            let ty = decls
                .vars
                .get(k)
                .ok_or_else(|| format!("unknown variable {k}"))?;
            Ok((k.clone(), coerce(v, ty, decls)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwhile::parser::parse_program;

    fn errors(src: &str) -> Vec<TypeError> {
        typecheck(&parse_program(src).unwrap())
            .err()
            .unwrap_or_default()
    }

    #[test]
    fn bool_plus_one_is_rejected() {
        assert_eq!(errors("var pos : int; var b : bool; pos := b + 1").len(), 1);
    }

    #[test]
    fn torus_program_typechecks() {
        let src = "var pos : vec<int>; var H : list<(bool, bool, int)>;
            var i, k, d, start_ : int; var mov, dir : bool; var crd : int;
            pos := (0, 0); H := []; i := 0;
            while i < k do
              mov ~~ {0,1}; dir ~~ {0,1}; crd ~~ [1,d];
              H := (mov, dir, crd) :: H;
              if mov then pos := pos + (dir ? 1 : -1) * u(crd, d) fi;
              i := i + 1;
            end
            return pos";
        assert!(errors(src).is_empty(), "{:?}", errors(src));
    }

    #[test]
    fn out_of_range_bernoulli_is_rejected() {
        assert_eq!(errors("var x : bool; x ~~ Bern(3/2)").len(), 1);
        assert!(errors("var x : bool; x ~~ Bern(1/2)").is_empty());
    }

    #[test]
    fn coercion() {
        let p = parse_program("var q : rat; var H : list<bool>; skip").unwrap();
        let m: BTreeMap<String, Value> = [
            ("q".to_string(), Value::int(1)),
            ("H".to_string(), Value::Tuple(vec![Value::Bool(true)])),
        ]
        .into();
        let c = coerce_memory(&m, &p.decls).unwrap();
        assert_eq!(c["q"], Value::rat(1, 1));
        assert_eq!(c["H"], Value::List(vec![Value::Bool(true)]));
    }
}
