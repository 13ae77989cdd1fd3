use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::ast::{Command, Expr};
use super::domain::Memory;
use super::eval::{eval_bool, eval_dist, eval_expr, Env, EvalError};
use crate::dist::{DistError, SubDist, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("fuel exhausted after {fuel} unrollings with residual mass {residual} in `{lp}`")]
    FuelExhausted {
        fuel: usize,
        residual: String,
        lp: String,
    },
}

impl From<DistError> for InterpError {
    fn from(e: DistError) -> Self {
        InterpError::Eval(EvalError::Dist(e))
    }
}

/// What to do with loop mass still inside the loop when fuel runs out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnExhaustion {
    Fail,
    /// Drop the residual mass (the sub-distribution reading of divergence).
    Drop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub dist: SubDist<Memory>,
    /// Total mass dropped because of fuel exhaustion.
    pub dropped: BigRational,
}

impl Outcome {
    pub fn exhausted(&self) -> bool {
        !self.dropped.is_zero()
    }
}

struct Machine {
    fuel: usize,
    mode: OnExhaustion,
    dropped: BigRational,
}

impl Machine {
    fn exec(&mut self, c: &Command, mu: SubDist<Memory>) -> Result<SubDist<Memory>, InterpError> {
        match c {
            Command::Skip => Ok(mu),
            Command::Assign(x, e) => Ok(mu.try_map(|m| -> Result<Memory, EvalError> {
                let v = eval_expr(m, e)?;
                let mut out = m.clone();
                out.insert(x.clone(), v);
                Ok(out)
            })?),
            Command::Rand(x, d) => Ok(mu.try_mlet(|m| -> Result<SubDist<Memory>, EvalError> {
                Ok(eval_dist(m, d)?.map(|v| {
                    let mut out = m.clone();
                    out.insert(x.clone(), v.clone());
                    out
                }))
            })?),
            Command::If(e, a, b) => {
                let (yes, no) = split(&mu, e)?;
                let ya = self.exec(a, yes)?;
                let nb = self.exec(b, no)?;
                Ok(ya.add(&nb)?)
            }
            Command::While(e, body) => {
                let mut exited = SubDist::empty();
                let mut current = mu;
                let mut rounds = 0;
                loop {
                    let (inside, outside) = split(&current, e)?;
                    exited = exited.add(&outside)?;
                    if inside.is_empty() {
                        return Ok(exited);
                    }
                    if rounds == self.fuel {
                        let residual = inside.mass();
                        return match self.mode {
                            OnExhaustion::Fail => Err(InterpError::FuelExhausted {
                                fuel: self.fuel,
                                residual: residual.to_string(),
                                lp: c.summary(),
                            }),
                            OnExhaustion::Drop => {
                                self.dropped += residual;
                                Ok(exited)
                            }
                        };
                    }
                    current = self.exec(body, inside)?;
                    rounds += 1;
                }
            }
            Command::Seq(items) => items.iter().try_fold(mu, |acc, s| self.exec(s, acc)),
        }
    }
}

fn split(
    mu: &SubDist<Memory>,
    guard: &Expr,
) -> Result<(SubDist<Memory>, SubDist<Memory>), EvalError> {
    // Evaluate once per memory so that errors surface before partitioning.
    for m in mu.support() {
        eval_bool(&Env::program(m), guard)?;
    }
    Ok(mu.partition(|m| eval_bool(&Env::program(m), guard).unwrap_or(false)))
}

/// Runs `c` from every memory of `mu`; loops unroll at most `fuel` times per
/// entry.
pub fn run_dist(
    c: &Command,
    mu: SubDist<Memory>,
    fuel: usize,
    mode: OnExhaustion,
) -> Result<Outcome, InterpError> {
    let mut machine = Machine {
        fuel,
        mode,
        dropped: BigRational::zero(),
    };
    let dist = machine.exec(c, mu)?;
    Ok(Outcome {
        dist,
        dropped: machine.dropped,
    })
}

pub fn run(
    c: &Command,
    m: &Memory,
    fuel: usize,
    mode: OnExhaustion,
) -> Result<Outcome, InterpError> {
    run_dist(c, SubDist::unit(m.clone()), fuel, mode)
}

/// `⟦c⟧(m)`, failing if any loop exhausts its fuel with mass left inside.
pub fn interpret(c: &Command, m: &Memory, fuel: usize) -> Result<SubDist<Memory>, InterpError> {
    Ok(run(c, m, fuel, OnExhaustion::Fail)?.dist)
}

/// `⟦e⟧_μ`.
pub fn pushforward(mu: &SubDist<Memory>, e: &Expr) -> Result<SubDist<Value>, EvalError> {
    mu.try_map(|m| eval_expr(m, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lossless {
    Yes,
    /// Mass below one without fuel exhaustion, from the given memory.
    No(Memory),
    /// Fuel ran out from the given memory; losslessness not established.
    Unknown(Memory),
}

impl Lossless {
    pub fn holds(&self) -> bool {
        matches!(self, Lossless::Yes)
    }
}

/// Checks that `c` terminates with mass one from every listed memory.
pub fn is_lossless<'a, I>(c: &Command, memories: I, fuel: usize) -> Result<Lossless, InterpError>
where
    I: IntoIterator<Item = &'a Memory>,
{
    for m in memories {
        let out = run(c, m, fuel, OnExhaustion::Drop)?;
        if !out.dist.is_lossless() {
            return Ok(if out.exhausted() {
                Lossless::Unknown(m.clone())
            } else {
                Lossless::No(m.clone())
            });
        }
    }
    Ok(Lossless::Yes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;
    use crate::pwhile::parser::parse_program;

    fn mem(items: &[(&str, i64)]) -> Memory {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), Value::int(*v)))
            .collect()
    }

    const WALK: &str = "var pos, start, i, k : int; var H : list<bool>; var b : bool;
        pos := start; H := []; i := 0;
        while i < k do
          b ~~ {0,1};
          H := b :: H;
          if b then pos++ else pos-- fi;
          i := i + 1;
        end
        return pos";

    #[test]
    fn assignment_is_a_point_mass() {
        let p = parse_program("var x : int; x := 1").unwrap();
        let out = interpret(&p.body, &Memory::new(), 1).unwrap();
        assert_eq!(out, SubDist::unit(mem(&[("x", 1)])));
    }

    #[test]
    fn walk_distribution() {
        let p = parse_program(WALK).unwrap();
        let out = interpret(&p.body, &mem(&[("start", 0), ("k", 2)]), 10).unwrap();
        let pos = pushforward(&out, p.ret.as_ref().unwrap()).unwrap();
        let expected = SubDist::from_weights([
            (Value::int(-2), ratio(1, 4)),
            (Value::int(0), ratio(1, 2)),
            (Value::int(2), ratio(1, 4)),
        ])
        .unwrap();
        assert_eq!(pos, expected);
    }

    #[test]
    fn walk_meeting_event() {
        let p = parse_program(WALK).unwrap();
        let out = interpret(&p.body, &mem(&[("start", 0), ("k", 2)]), 10).unwrap();
        let not_met = crate::pwhile::parse_expr_in("!reached(H, 1)", &p.decls).unwrap();
        let ev = pushforward(&out, &not_met).unwrap();
        assert_eq!(
            ev,
            SubDist::uniform([Value::Bool(false), Value::Bool(true)]).unwrap()
        );
    }

    #[test]
    fn biased_coin_one_step() {
        let p = parse_program(
            "var n, i, k : int; var q1 : rat; var x : bool;
             n := 0; i := 0;
             while i < k do: x ~~ Bern(q1); if x then n := n + 1; fi i := i + 1; end
             return n",
        )
        .unwrap();
        let mut m = mem(&[("k", 1)]);
        m.insert("q1".into(), Value::rat(7, 10));
        let out = interpret(&p.body, &m, 5).unwrap();
        let n = pushforward(&out, &Expr::var("n")).unwrap();
        assert_eq!(
            n,
            SubDist::from_weights([(Value::int(0), ratio(3, 10)), (Value::int(1), ratio(7, 10))])
                .unwrap()
        );
    }

    #[test]
    fn divergence_and_losslessness() {
        let p = parse_program("var i, n : int; while true do skip end").unwrap();
        let m = Memory::new();
        assert!(matches!(
            interpret(&p.body, &m, 50),
            Err(InterpError::FuelExhausted { .. })
        ));
        let out = run(&p.body, &m, 50, OnExhaustion::Drop).unwrap();
        assert!(out.dist.is_empty() && out.exhausted());
        assert_eq!(
            is_lossless(&p.body, [&m], 100).unwrap(),
            Lossless::Unknown(m.clone())
        );

        assert!(is_lossless(&Command::Skip, [&m], 1).unwrap().holds());
        let counter = parse_program("var i, n : int; while i < n do i := i + 1 end").unwrap();
        let ms: Vec<Memory> = (0..4).map(|n| mem(&[("i", 0), ("n", n)])).collect();
        assert!(is_lossless(&counter.body, &ms, 4).unwrap().holds());
        assert!(!is_lossless(&counter.body, &ms, 2).unwrap().holds());
    }

    #[test]
    fn more_fuel_keeps_exact_results() {
        let p = parse_program(WALK).unwrap();
        let m = mem(&[("start", 0), ("k", 3)]);
        let a = interpret(&p.body, &m, 3).unwrap();
        let b = interpret(&p.body, &m, 30).unwrap();
        assert_eq!(a, b);
    }
}
