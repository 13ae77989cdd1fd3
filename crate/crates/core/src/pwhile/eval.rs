use std::borrow::Cow;
use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::ast::{BinOp, DistExpr, Expr, Quant, Side, UnOp, Var};
use super::domain::Memory;
use super::functions;
use crate::dist::{DistError, SubDist, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivByZero,
    #[error("modulus must be positive, got {0}")]
    BadModulus(String),
    #[error("index {index} out of range for {value}")]
    OutOfRange { index: String, value: String },
    #[error("distribution parameter {0} is outside [0, 1]")]
    BadProbability(String),
    #[error("invalid distribution table: {0}")]
    BadTable(String),
    #[error("empty distribution support: {0}")]
    EmptySupport(String),
    #[error("{name}: {msg}")]
    Function { name: String, msg: String },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Variable bindings visible to the evaluator: an untagged memory for
/// program expressions, two memories for relational assertions, plus
/// quantifier-bound names.
#[derive(Clone, Debug, Default)]
pub struct Env<'a> {
    pub plain: Option<&'a Memory>,
    pub left: Option<&'a Memory>,
    pub right: Option<&'a Memory>,
    bound: Vec<(String, Value)>,
}

impl<'a> Env<'a> {
    pub fn program(m: &'a Memory) -> Env<'a> {
        Env {
            plain: Some(m),
            ..Env::default()
        }
    }

    pub fn relational(m1: &'a Memory, m2: &'a Memory) -> Env<'a> {
        Env {
            left: Some(m1),
            right: Some(m2),
            ..Env::default()
        }
    }

    /// Adds a binding for an untagged name (shadowing memories).
    pub fn bind(mut self, name: &str, v: Value) -> Env<'a> {
        self.bound.push((name.to_string(), v));
        self
    }

    fn lookup(&self, v: &Var) -> Result<&Value, EvalError> {
        let found = match v.side {
            None => self
                .bound
                .iter()
                .rev()
                .find(|(n, _)| n == &v.name)
                .map(|(_, x)| x)
                .or_else(|| self.plain.and_then(|m| m.get(&v.name))),
            Some(Side::Left) => self.left.and_then(|m| m.get(&v.name)),
            Some(Side::Right) => self.right.and_then(|m| m.get(&v.name)),
        };
        found.ok_or_else(|| EvalError::Unbound(v.to_string()))
    }
}

pub fn eval_expr(m: &Memory, e: &Expr) -> Result<Value, EvalError> {
    eval(&Env::program(m), e)
}

pub fn eval_assertion(m1: &Memory, m2: &Memory, a: &Expr) -> Result<bool, EvalError> {
    eval_bool(&Env::relational(m1, m2), a)
}

pub fn eval_bool(env: &Env<'_>, e: &Expr) -> Result<bool, EvalError> {
    let v = value(env, e)?;
    v.as_bool()
        .ok_or_else(|| EvalError::Type(format!("expected a boolean, got {v} from {e}")))
}

fn ratio(v: &Value) -> Option<BigRational> {
    v.as_ratio()
}

fn num_result(r: BigRational, ints: bool) -> Value {
    if ints {
        Value::Int(r.to_integer())
    } else {
        Value::Rat(r)
    }
}

/// Order used by comparison operators: numbers compare by value across
/// `int`/`rat`, compound values lexicographically, everything else by the
/// value order within one kind.
pub fn compare(a: &Value, b: &Value) -> Result<Ordering, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(x.cmp(y)),
        (Value::Int(_) | Value::Rat(_), Value::Int(_) | Value::Rat(_)) => {
            Ok(ratio(a).cmp(&ratio(b)))
        }
        (Value::Tuple(xs), Value::Tuple(ys)) | (Value::List(xs), Value::List(ys)) => {
            for (x, y) in xs.iter().zip(ys) {
                match compare(x, y)? {
                    Ordering::Equal => {}
                    other => return Ok(other),
                }
            }
            Ok(xs.len().cmp(&ys.len()))
        }
        (Value::Bool(x), Value::Bool(y)) => Ok(x.cmp(y)),
        (Value::Enum(x), Value::Enum(y)) => Ok(x.cmp(y)),
        _ => Err(EvalError::Type(format!("cannot compare {a} with {b}"))),
    }
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Tuple(xs), Value::Tuple(ys)) if matches!(op, BinOp::Add | BinOp::Sub) => {
            if xs.len() != ys.len() {
                return Err(EvalError::Type(format!(
                    "vector lengths differ: {a} and {b}"
                )));
            }
            Ok(Value::Tuple(
                xs.iter()
                    .zip(ys)
                    .map(|(x, y)| arith(op, x, y))
                    .collect::<Result<_, _>>()?,
            ))
        }
        (Value::Tuple(xs), s) if matches!(op, BinOp::Mul | BinOp::Mod) => Ok(Value::Tuple(
            xs.iter()
                .map(|x| arith(op, x, s))
                .collect::<Result<_, _>>()?,
        )),
        (s, Value::Tuple(ys)) if op == BinOp::Mul => Ok(Value::Tuple(
            ys.iter()
                .map(|y| arith(op, s, y))
                .collect::<Result<_, _>>()?,
        )),
        (Value::Int(i), Value::Int(k)) if op != BinOp::Div => match op {
            BinOp::Add => Ok(Value::Int(i + k)),
            BinOp::Sub => Ok(Value::Int(i - k)),
            BinOp::Mul => Ok(Value::Int(i * k)),
            BinOp::Mod if k.is_positive() => Ok(Value::Int(i.mod_floor(k))),
            BinOp::Mod => Err(EvalError::BadModulus(k.to_string())),
            _ => unreachable!("not an arithmetic operator"),
        },
        _ => {
            let (x, y) = match (ratio(a), ratio(b)) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(EvalError::Type(format!("arithmetic on {a} and {b}"))),
            };
            let ints = matches!((a, b), (Value::Int(_), Value::Int(_)));
            match op {
                BinOp::Add => Ok(num_result(x + y, ints)),
                BinOp::Sub => Ok(num_result(x - y, ints)),
                BinOp::Mul => Ok(num_result(x * y, ints)),
                BinOp::Div => {
                    if y.is_zero() {
                        return Err(EvalError::DivByZero);
                    }
                    Ok(Value::Rat(x / y))
                }
                BinOp::Mod => {
                    let (Value::Int(i), Value::Int(k)) = (a, b) else {
                        return Err(EvalError::Type(format!("mod on non-integers {a} and {b}")));
                    };
                    if !k.is_positive() {
                        return Err(EvalError::BadModulus(k.to_string()));
                    }
                    Ok(Value::Int(i.mod_floor(k)))
                }
                _ => unreachable!("not an arithmetic operator"),
            }
        }
    }
}

fn index_of(i: &Value, len: usize, container: &Value) -> Result<usize, EvalError> {
    let oob = || EvalError::OutOfRange {
        index: i.to_string(),
        value: container.to_string(),
    };
    let k = i
        .as_int()
        .ok_or_else(|| EvalError::Type(format!("index {i} is not an integer")))?;
    let k = k.to_usize().ok_or_else(oob)?;
    if k == 0 || k > len {
        return Err(oob());
    }
    Ok(k - 1)
}

pub fn eval(env: &Env<'_>, e: &Expr) -> Result<Value, EvalError> {
    value(env, e).map(Cow::into_owned)
}

/// Evaluates without copying values that are read straight out of the
/// environment.
fn value<'v>(env: &'v Env<'_>, e: &Expr) -> Result<Cow<'v, Value>, EvalError> {
    let owned = match e {
        Expr::Lit(v) => v.clone(),
        Expr::Var(v) => return env.lookup(v).map(Cow::Borrowed),
        Expr::Unary(UnOp::Not, a) => Value::Bool(!eval_bool(env, a)?),
        Expr::Unary(UnOp::Neg, a) => arith(BinOp::Mul, &Value::int(-1), &*value(env, a)?)?,
        Expr::Binary(op, a, b) => match op {
            BinOp::And => Value::Bool(eval_bool(env, a)? && eval_bool(env, b)?),
            BinOp::Or => Value::Bool(eval_bool(env, a)? || eval_bool(env, b)?),
            BinOp::Implies => Value::Bool(!eval_bool(env, a)? || eval_bool(env, b)?),
            BinOp::Iff => Value::Bool(eval_bool(env, a)? == eval_bool(env, b)?),
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ord = compare(&*value(env, a)?, &*value(env, b)?)?;
                Value::Bool(match op {
                    BinOp::Eq => ord == Ordering::Equal,
                    BinOp::Ne => ord != Ordering::Equal,
                    BinOp::Lt => ord == Ordering::Less,
                    BinOp::Le => ord != Ordering::Greater,
                    BinOp::Gt => ord == Ordering::Greater,
                    _ => ord != Ordering::Less,
                })
            }
            BinOp::Cons => {
                let head = eval(env, a)?;
                match eval(env, b)? {
                    Value::List(mut xs) => {
                        xs.insert(0, head);
                        Value::List(xs)
                    }
                    other => return Err(EvalError::Type(format!("cons onto non-list {other}"))),
                }
            }
            _ => arith(*op, &*value(env, a)?, &*value(env, b)?)?,
        },
        Expr::Cond(c, a, b) => {
            return if eval_bool(env, c)? {
                value(env, a)
            } else {
                value(env, b)
            };
        }
        Expr::Tuple(xs) => Value::Tuple(xs.iter().map(|x| eval(env, x)).collect::<Result<_, _>>()?),
        Expr::List(xs) => Value::List(xs.iter().map(|x| eval(env, x)).collect::<Result<_, _>>()?),
        Expr::Proj(a, k) => {
            let pick = |v: &Value| match v {
                Value::Tuple(xs) if *k >= 1 && *k <= xs.len() => Ok(*k - 1),
                other => Err(EvalError::OutOfRange {
                    index: k.to_string(),
                    value: other.to_string(),
                }),
            };
            return match value(env, a)? {
                Cow::Borrowed(v) => {
                    let at = pick(v)?;
                    Ok(Cow::Borrowed(&elements(v)[at]))
                }
                Cow::Owned(v) => {
                    let at = pick(&v)?;
                    Ok(Cow::Owned(elements(&v)[at].clone()))
                }
            };
        }
        Expr::Index(a, i) => {
            let i = value(env, i)?;
            let pick = |container: &Value| match container {
                Value::Tuple(xs) | Value::List(xs) => index_of(&i, xs.len(), container),
                other => Err(EvalError::Type(format!("indexing into {other}"))),
            };
            return match value(env, a)? {
                Cow::Borrowed(v) => {
                    let at = pick(v)?;
                    Ok(Cow::Borrowed(&elements(v)[at]))
                }
                Cow::Owned(v) => {
                    let at = pick(&v)?;
                    Ok(Cow::Owned(elements(&v)[at].clone()))
                }
            };
        }
        Expr::Call(name, args) => {
            let f = functions::lookup(name).ok_or_else(|| EvalError::Function {
                name: name.clone(),
                msg: "unknown function".into(),
            })?;
            let vals = args
                .iter()
                .map(|x| value(env, x))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != f.arity {
                return Err(EvalError::Function {
                    name: name.clone(),
                    msg: format!("expects {} arguments", f.arity),
                });
            }
            let refs: Vec<&Value> = vals.iter().map(|v| v.as_ref()).collect();
            (f.eval)(&refs).map_err(|msg| EvalError::Function {
                name: name.clone(),
                msg,
            })?
        }
        Expr::Quant(q, x, lo, hi, body) => {
            let bound_int = |e: &Expr| -> Result<BigInt, EvalError> {
                let v = value(env, e)?;
                v.as_int().cloned().ok_or_else(|| {
                    EvalError::Type(format!("quantifier bound {v} is not an integer"))
                })
            };
            let (lo, hi) = (bound_int(lo)?, bound_int(hi)?);
            let mut i = lo;
            let mut verdict = *q == Quant::Forall;
            while i <= hi {
                let inner = env.clone().bind(x, Value::Int(i.clone()));
                let b = eval_bool(&inner, body)?;
                match q {
                    Quant::Forall if !b => {
                        verdict = false;
                        break;
                    }
                    Quant::Exists if b => {
                        verdict = true;
                        break;
                    }
                    _ => {}
                }
                i += 1;
            }
            Value::Bool(verdict)
        }
    };
    Ok(Cow::Owned(owned))
}

fn elements(v: &Value) -> &[Value] {
    match v {
        Value::Tuple(xs) | Value::List(xs) => xs,
        _ => &[],
    }
}

fn probability(v: &Value) -> Result<BigRational, EvalError> {
    let r = ratio(v).ok_or_else(|| EvalError::Type(format!("probability {v} is not a number")))?;
    if r.is_negative() || r > BigRational::one() {
        return Err(EvalError::BadProbability(v.to_string()));
    }
    Ok(r)
}

pub fn eval_dist(m: &Memory, d: &DistExpr) -> Result<SubDist<Value>, EvalError> {
    eval_dist_in(&Env::program(m), d)
}

pub fn eval_dist_in(env: &Env<'_>, d: &DistExpr) -> Result<SubDist<Value>, EvalError> {
    match d {
        DistExpr::Bern(p) => {
            let p = probability(&eval(env, p)?)?;
            let q = BigRational::one() - &p;
            Ok(SubDist::from_weights([
                (Value::Bool(true), p),
                (Value::Bool(false), q),
            ])?)
        }
        DistExpr::UniformSet(xs) => {
            if xs.is_empty() {
                return Err(EvalError::EmptySupport(d.to_string()));
            }
            let vals = xs
                .iter()
                .map(|x| eval(env, x))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SubDist::uniform(vals)?)
        }
        DistExpr::UniformRange(lo, hi) => {
            let bound = |e: &Expr| -> Result<BigInt, EvalError> {
                let v = eval(env, e)?;
                v.as_int()
                    .cloned()
                    .ok_or_else(|| EvalError::Type(format!("range bound {v} is not an integer")))
            };
            let (lo, hi) = (bound(lo)?, bound(hi)?);
            if hi < lo {
                return Err(EvalError::EmptySupport(d.to_string()));
            }
            let mut vals = Vec::new();
            let mut i = lo;
            while i <= hi {
                vals.push(Value::Int(i.clone()));
                i += 1;
            }
            Ok(SubDist::uniform(vals)?)
        }
        DistExpr::Table(rows) => {
            let mut items = Vec::with_capacity(rows.len());
            for (v, w) in rows {
                let value = eval(env, v)?;
                let weight = eval(env, w)?;
                let r = ratio(&weight)
                    .ok_or_else(|| EvalError::Type(format!("weight {weight} is not a number")))?;
                if r.is_negative() {
                    return Err(EvalError::BadTable(format!(
                        "entry {value} has negative weight {weight}"
                    )));
                }
                items.push((value, r));
            }
            SubDist::from_weights(items).map_err(|e| EvalError::BadTable(e.to_string()))
        }
    }
}
