use std::collections::BTreeSet;

use super::ast::{Command, Expr};
use super::domain::Memory;
use super::interp::{pushforward, run, InterpError, OnExhaustion};
use crate::dist::{SubDist, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    Differs {
        memory: Memory,
        left: SubDist<Value>,
        right: SubDist<Value>,
    },
    /// A loop ran out of fuel from this memory.
    Indeterminate {
        memory: Memory,
    },
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }
}

fn compare_by<'a, I, F>(
    c1: &Command,
    c2: &Command,
    memories: I,
    fuel: usize,
    observe: F,
) -> Result<Equivalence, InterpError>
where
    I: IntoIterator<Item = &'a Memory>,
    F: Fn(&SubDist<Memory>) -> Result<SubDist<Value>, InterpError>,
{
    for m in memories {
        let a = run(c1, m, fuel, OnExhaustion::Drop)?;
        let b = run(c2, m, fuel, OnExhaustion::Drop)?;
        if a.exhausted() || b.exhausted() {
            return Ok(Equivalence::Indeterminate { memory: m.clone() });
        }
        let (left, right) = (observe(&a.dist)?, observe(&b.dist)?);
        if left != right {
            return Ok(Equivalence::Differs {
                memory: m.clone(),
                left,
                right,
            });
        }
    }
    Ok(Equivalence::Equal)
}

/// Exact comparison of the output distributions of `outs` (as a tuple)
/// from every listed memory.
pub fn semantically_equivalent<'a, I>(
    c1: &Command,
    c2: &Command,
    memories: I,
    outs: &[Expr],
    fuel: usize,
) -> Result<Equivalence, InterpError>
where
    I: IntoIterator<Item = &'a Memory>,
{
    let out = Expr::Tuple(outs.to_vec());
    compare_by(c1, c2, memories, fuel, |mu| Ok(pushforward(mu, &out)?))
}

/// Compares whole final memories with the `hidden` variables removed.
pub fn equivalent_except<'a, I>(
    c1: &Command,
    c2: &Command,
    memories: I,
    hidden: &BTreeSet<String>,
    fuel: usize,
) -> Result<Equivalence, InterpError>
where
    I: IntoIterator<Item = &'a Memory>,
{
    compare_by(c1, c2, memories, fuel, |mu| {
        Ok(mu.map(|m| {
            Value::Tuple(
                m.iter()
                    .filter(|(k, _)| !hidden.contains(*k))
                    .map(|(k, v)| Value::Tuple(vec![Value::Enum(k.clone()), v.clone()]))
                    .collect(),
            )
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;
    use crate::pwhile::parser::parse_program;
    use crate::pwhile::transform::{apply_transform, Transform};

    fn mem(items: &[(&str, Value)]) -> Memory {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    const C_STAR: &str = "var n, i, k : int; var q1, r : rat; var x, y, z : bool;
        n := 0; i := 0;
        while i < k do:
          y ~~ Bern(q1); z ~~ Bern(r); x := y && z;
          if x then n := n + 1; fi;
          i := i + 1;
        end
        return n";

    const C2: &str = "var n, i, k : int; var q2 : rat; var x : bool;
        n := 0; i := 0;
        while i < k do:
          x ~~ Bern(q2);
          if x then n := n + 1 fi;
          i := i + 1
        end
        return n";

    #[test]
    fn self_equivalence() {
        let p = parse_program(C2).unwrap();
        let m = mem(&[("k", Value::int(2)), ("q2", Value::rat(1, 3))]);
        assert!(
            semantically_equivalent(&p.body, &p.body, [&m], &[Expr::var("n")], 10)
                .unwrap()
                .holds()
        );
    }

    #[test]
    fn split_coins_match_the_product_coin() {
        let a = parse_program(C_STAR).unwrap();
        let b = parse_program(C2).unwrap();
        let m = mem(&[
            ("k", Value::int(2)),
            ("q1", Value::Rat(ratio(7, 10))),
            ("r", Value::Rat(ratio(4, 7))),
            ("q2", Value::Rat(ratio(2, 5))),
        ]);
        assert!(
            semantically_equivalent(&a.body, &b.body, [&m], &[Expr::var("n")], 10)
                .unwrap()
                .holds()
        );
        let wrong = mem(&[
            ("k", Value::int(2)),
            ("q1", Value::Rat(ratio(7, 10))),
            ("r", Value::Rat(ratio(1, 2))),
            ("q2", Value::Rat(ratio(2, 5))),
        ]);
        let res =
            semantically_equivalent(&a.body, &b.body, [&wrong], &[Expr::var("n")], 10).unwrap();
        assert!(matches!(res, Equivalence::Differs { .. }));
    }

    #[test]
    fn loop_split_preserves_bins() {
        let src = "var i, n, m, binA, binB : int; var b : bool;
            i, binA, binB := 0;
            while i < n do i := i + 1; b ~~ {0,1}; if b then binA++ else binB++ fi end
            return (binA, binB)";
        let p = parse_program(src).unwrap();
        let cond = crate::pwhile::parse_expr_in("i < m", &p.decls).unwrap();
        let q = apply_transform(&p, &Transform::LoopSplit { cond }, &[3]).unwrap();
        let m = mem(&[("n", Value::int(3)), ("m", Value::int(2))]);
        let outs = [Expr::var("binA"), Expr::var("binB")];
        assert!(semantically_equivalent(&p.body, &q.body, [&m], &outs, 10)
            .unwrap()
            .holds());
    }

    #[test]
    fn divergence_is_indeterminate() {
        let p = parse_program("var x : int; while true do skip end").unwrap();
        let m = Memory::new();
        let res = semantically_equivalent(&p.body, &p.body, [&m], &[], 5).unwrap();
        assert!(matches!(res, Equivalence::Indeterminate { .. }));
    }
}
