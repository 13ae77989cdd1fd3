//! Registry of the pure functions callable from expressions and assertions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::ast::Type;
use crate::dist::Value;

pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    pub ty: fn(&[Type]) -> Result<Type, String>,
    pub eval: fn(&[&Value]) -> Result<Value, String>,
    pub doc: &'static str,
}

static BUILTINS: &[Builtin] = &[
    Builtin { name: "len", arity: 1, ty: ty_len, eval: ev_len, doc: "length of a list or tuple" },
    Builtin { name: "min", arity: 2, ty: ty_num2, eval: ev_min, doc: "minimum of two numbers" },
    Builtin { name: "max", arity: 2, ty: ty_num2, eval: ev_max, doc: "maximum of two numbers" },
    Builtin { name: "pos", arity: 1, ty: ty_num1, eval: ev_pos, doc: "positive part max(x, 0)" },
    Builtin { name: "abs", arity: 1, ty: ty_num1, eval: ev_abs, doc: "absolute value" },
    Builtin { name: "u", arity: 2, ty: ty_u, eval: ev_u, doc: "u(i, d): i-th base vector of length d" },
    Builtin {
        name: "sigma",
        arity: 1,
        ty: ty_sigma,
        eval: ev_sigma,
        doc: "number of true minus number of false entries of a boolean history",
    },
    Builtin {
        name: "reached",
        arity: 2,
        ty: ty_reached,
        eval: ev_reached,
        doc: "reached(H, n): some chronological prefix of H has sigma equal to n",
    },
    Builtin {
        name: "drift1",
        arity: 2,
        ty: ty_drift1,
        eval: ev_drift1,
        doc: "drift1(i, H): net displacement of coordinate i along a torus history",
    },
    Builtin {
        name: "drift2",
        arity: 4,
        ty: ty_drift2,
        eval: ev_drift2,
        doc: "drift2(i, H, delta, M): displacement of the coupled walk, replayed from offset delta mod M",
    },
];

pub fn lookup(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

pub fn all() -> &'static [Builtin] {
    BUILTINS
}

fn numeric(t: &Type) -> bool {
    matches!(t, Type::Int | Type::Rat)
}

fn ty_len(args: &[Type]) -> Result<Type, String> {
    match &args[0] {
        Type::List(_) | Type::Vec(_) | Type::Tuple(_) => Ok(Type::Int),
        other => Err(format!("len expects a list, got {other}")),
    }
}

fn ty_num1(args: &[Type]) -> Result<Type, String> {
    if numeric(&args[0]) {
        Ok(args[0].clone())
    } else {
        Err(format!("expected a number, got {}", args[0]))
    }
}

fn ty_num2(args: &[Type]) -> Result<Type, String> {
    match (&args[0], &args[1]) {
        (Type::Int, Type::Int) => Ok(Type::Int),
        (a, b) if numeric(a) && numeric(b) => Ok(Type::Rat),
        (a, b) => Err(format!("expected numbers, got {a} and {b}")),
    }
}

fn ty_u(args: &[Type]) -> Result<Type, String> {
    match (&args[0], &args[1]) {
        (Type::Int, Type::Int) => Ok(Type::Vec(Box::new(Type::Int))),
        (a, b) => Err(format!("u expects (int, int), got ({a}, {b})")),
    }
}

fn ty_sigma(args: &[Type]) -> Result<Type, String> {
    match &args[0] {
        Type::List(t) if **t == Type::Bool => Ok(Type::Int),
        other => Err(format!("sigma expects list<bool>, got {other}")),
    }
}

fn ty_reached(args: &[Type]) -> Result<Type, String> {
    ty_sigma(&args[..1])?;
    if args[1] != Type::Int {
        return Err(format!("reached expects an int target, got {}", args[1]));
    }
    Ok(Type::Bool)
}

fn torus_history(t: &Type) -> bool {
    matches!(t, Type::List(e) if **e == Type::Tuple(vec![Type::Bool, Type::Bool, Type::Int]))
}

fn ty_drift1(args: &[Type]) -> Result<Type, String> {
    if args[0] != Type::Int || !torus_history(&args[1]) {
        return Err(format!(
            "drift1 expects (int, list<(bool, bool, int)>), got ({}, {})",
            args[0], args[1]
        ));
    }
    Ok(Type::Int)
}

fn ty_drift2(args: &[Type]) -> Result<Type, String> {
    ty_drift1(&args[..2])?;
    let vec_ok = matches!(&args[2], Type::Vec(e) if **e == Type::Int)
        || matches!(&args[2], Type::Tuple(ts) if ts.iter().all(|t| *t == Type::Int));
    if !vec_ok || args[3] != Type::Int {
        return Err(format!(
            "drift2 expects an int vector offset and int modulus, got ({}, {})",
            args[2], args[3]
        ));
    }
    Ok(Type::Int)
}

fn ratio_of(v: &Value) -> Result<BigRational, String> {
    v.as_ratio()
        .ok_or_else(|| format!("expected a number, got {v}"))
}

fn number(r: BigRational, int_like: bool) -> Value {
    if int_like && r.is_integer() {
        Value::Int(r.to_integer())
    } else {
        Value::Rat(r)
    }
}

fn both_int(args: &[&Value]) -> bool {
    args.iter().all(|a| matches!(a, Value::Int(_)))
}

fn ev_len(args: &[&Value]) -> Result<Value, String> {
    match args[0] {
        Value::List(xs) | Value::Tuple(xs) => Ok(Value::int(xs.len() as i64)),
        other => Err(format!("len of non-list {other}")),
    }
}

fn ev_min(args: &[&Value]) -> Result<Value, String> {
    let (a, b) = (ratio_of(args[0])?, ratio_of(args[1])?);
    Ok(number(if a <= b { a } else { b }, both_int(args)))
}

fn ev_max(args: &[&Value]) -> Result<Value, String> {
    let (a, b) = (ratio_of(args[0])?, ratio_of(args[1])?);
    Ok(number(if a >= b { a } else { b }, both_int(args)))
}

fn ev_pos(args: &[&Value]) -> Result<Value, String> {
    let a = ratio_of(args[0])?;
    Ok(number(
        if a.is_negative() {
            BigRational::zero()
        } else {
            a
        },
        both_int(args),
    ))
}

fn ev_abs(args: &[&Value]) -> Result<Value, String> {
    Ok(number(ratio_of(args[0])?.abs(), both_int(args)))
}

fn small_int(v: &Value) -> Result<i64, String> {
    v.as_i64()
        .ok_or_else(|| format!("expected a small integer, got {v}"))
}

fn ev_u(args: &[&Value]) -> Result<Value, String> {
    let (i, d) = (small_int(args[0])?, small_int(args[1])?);
    if d < 0 || i < 1 || i > d {
        return Err(format!("u({i}, {d}): index out of range"));
    }
    Ok(Value::Tuple(
        (1..=d).map(|j| Value::int(i64::from(j == i))).collect(),
    ))
}

fn bools(v: &Value) -> Result<Vec<bool>, String> {
    match v {
        Value::List(xs) => xs
            .iter()
            .map(|x| {
                x.as_bool()
                    .ok_or_else(|| format!("non-boolean history entry {x}"))
            })
            .collect(),
        other => Err(format!("expected a boolean history, got {other}")),
    }
}

/// Histories are built by prepending, so chronological order is reversed.
fn chronological<T: Clone>(xs: &[T]) -> Vec<T> {
    xs.iter().rev().cloned().collect()
}

fn ev_sigma(args: &[&Value]) -> Result<Value, String> {
    let s: i64 = bools(args[0])?
        .into_iter()
        .map(|b| if b { 1 } else { -1 })
        .sum();
    Ok(Value::int(s))
}

fn ev_reached(args: &[&Value]) -> Result<Value, String> {
    let target = args[1]
        .as_int()
        .ok_or("reached expects an int target")?
        .clone();
    let mut acc = BigInt::zero();
    if acc == target {
        return Ok(Value::Bool(true));
    }
    for b in chronological(&bools(args[0])?) {
        acc += if b { 1 } else { -1 };
        if acc == target {
            return Ok(Value::Bool(true));
        }
    }
    Ok(Value::Bool(false))
}

type Step = (bool, bool, i64);

fn torus_steps(v: &Value) -> Result<Vec<Step>, String> {
    let Value::List(xs) = v else {
        return Err(format!("expected a torus history, got {v}"));
    };
    let steps = xs
        .iter()
        .map(|x| match x {
            Value::Tuple(p) if p.len() == 3 => {
                let mov = p[0].as_bool().ok_or("history entry: mov is not a bool")?;
                let dir = p[1].as_bool().ok_or("history entry: dir is not a bool")?;
                Ok((mov, dir, small_int(&p[2])?))
            }
            other => Err(format!("malformed history entry {other}")),
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(chronological(&steps))
}

fn ev_drift1(args: &[&Value]) -> Result<Value, String> {
    let i = small_int(args[0])?;
    let total: i64 = torus_steps(args[1])?
        .into_iter()
        .filter(|&(mov, _, crd)| mov && crd == i)
        .map(|(_, dir, _)| if dir { 1 } else { -1 })
        .sum();
    Ok(Value::int(total))
}

/// The second walk moves exactly when the first does, except in a
/// coordinate where the two have not met yet: there it moves when the
/// first stays and vice versa.
fn ev_drift2(args: &[&Value]) -> Result<Value, String> {
    let i = small_int(args[0])?;
    let mut offset: Vec<i64> = match args[2] {
        Value::Tuple(xs) => xs.iter().map(small_int).collect::<Result<_, _>>()?,
        other => return Err(format!("expected an offset vector, got {other}")),
    };
    let modulus = small_int(args[3])?;
    if modulus <= 0 {
        return Err(format!("modulus must be positive, got {modulus}"));
    }
    let mut total = 0i64;
    for (mov1, dir, crd) in torus_steps(args[1])? {
        let c = usize::try_from(crd - 1)
            .ok()
            .filter(|c| *c < offset.len())
            .ok_or_else(|| format!("coordinate {crd} out of range"))?;
        let met = offset[c].rem_euclid(modulus) == 0;
        let mov2 = if met { mov1 } else { !mov1 };
        let step = if dir { 1 } else { -1 };
        if mov2 && crd == i {
            total += step;
        }
        offset[c] += (i64::from(mov2) - i64::from(mov1)) * step;
    }
    Ok(Value::int(total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(bs: &[bool]) -> Value {
        Value::List(bs.iter().map(|&b| Value::Bool(b)).collect())
    }

    fn call(name: &str, args: &[Value]) -> Value {
        let refs: Vec<&Value> = args.iter().collect();
        (lookup(name).unwrap().eval)(&refs).unwrap()
    }

    #[test]
    fn sigma_and_reached() {
        // Chronologically: true, false, true (list is newest first).
        let h = hist(&[true, false, true]);
        assert_eq!(call("sigma", std::slice::from_ref(&h)), Value::int(1));
        assert_eq!(
            call("reached", &[h.clone(), Value::int(1)]),
            Value::Bool(true)
        );
        assert_eq!(
            call("reached", &[h.clone(), Value::int(2)]),
            Value::Bool(false)
        );
        // Chronologically false then true: never reaches 1 before the end.
        assert_eq!(
            call("reached", &[hist(&[true, false]), Value::int(1)]),
            Value::Bool(false)
        );
        assert_eq!(
            call("reached", &[hist(&[]), Value::int(0)]),
            Value::Bool(true)
        );
    }

    #[test]
    fn positive_part_and_base_vectors() {
        assert_eq!(call("pos", &[Value::rat(-1, 10)]), Value::rat(0, 1));
        assert_eq!(call("pos", &[Value::int(3)]), Value::int(3));
        assert_eq!(
            call("u", &[Value::int(2), Value::int(3)]),
            Value::Tuple(vec![0.into(), 1.into(), 0.into()])
        );
        assert!((lookup("u").unwrap().eval)(&[&Value::int(4), &Value::int(3)]).is_err());
    }

    fn step(mov: bool, dir: bool, crd: i64) -> Value {
        Value::Tuple(vec![Value::Bool(mov), Value::Bool(dir), Value::int(crd)])
    }

    #[test]
    fn torus_drifts() {
        // Newest first: second step (stay), first step (move up in 1).
        let h = Value::List(vec![step(false, true, 1), step(true, true, 1)]);
        assert_eq!(call("drift1", &[Value::int(1), h.clone()]), Value::int(1));
        // Offset 1 mod 3: the walks disagree on both steps.
        let delta = Value::Tuple(vec![Value::int(1)]);
        // Step 1: walk 2 stays, offset 0. Step 2: met, walk 2 copies (stays).
        assert_eq!(
            call("drift2", &[Value::int(1), h.clone(), delta, Value::int(3)]),
            Value::int(0)
        );
        let zero = Value::Tuple(vec![Value::int(0)]);
        assert_eq!(
            call("drift2", &[Value::int(1), h, zero, Value::int(3)]),
            Value::int(1)
        );
    }
}
