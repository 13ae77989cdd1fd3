//! Reference computations written directly over integers and rationals.
//! Nothing here goes through the interpreter, the checker or the flow
//! solver.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Dist<K = i64> = BTreeMap<K, BigRational>;

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn bump<K: Ord>(d: &mut Dist<K>, k: K, p: BigRational) {
    if p.is_zero() {
        return;
    }
    let slot = d.entry(k).or_insert_with(BigRational::zero);
    *slot += p;
}

pub fn tv<K: Ord + Clone>(a: &Dist<K>, b: &Dist<K>) -> BigRational {
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let zero = BigRational::zero();
    let sum: BigRational = keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero)).abs())
        .sum();
    sum / BigRational::from_integer(2.into())
}

/// `a` dominates `b` when every upper tail of `a` is at least as heavy.
pub fn dominates(a: &Dist, b: &Dist) -> bool {
    let mut points: Vec<i64> = a.keys().chain(b.keys()).copied().collect();
    points.sort_unstable();
    points.dedup();
    let tail = |d: &Dist, t: i64| d.range(t..).map(|(_, p)| p.clone()).sum::<BigRational>();
    points.iter().all(|&t| tail(a, t) >= tail(b, t))
}

/// Final position of a fair ±1 walk, by listing all `2^k` paths.
pub fn walk(start: i64, k: u32) -> Dist {
    let mut d = Dist::new();
    let p = r(1, 1 << k);
    for path in 0..(1u32 << k) {
        let steps: i64 = (0..k)
            .map(|i| if path >> i & 1 == 1 { 1 } else { -1 })
            .sum();
        bump(&mut d, start + steps, p.clone());
    }
    d
}

/// Probability that a fair walk started at 0 never sits at `n` during its
/// first `k` steps.
pub fn walk_misses(n: i64, k: u32) -> BigRational {
    let misses = (0..(1u32 << k))
        .filter(|path| {
            let mut s = 0i64;
            (0..k).all(|i| {
                s += if path >> i & 1 == 1 { 1 } else { -1 };
                s != n
            })
        })
        .count();
    r(misses as i64, 1 << k)
}

/// One lazy torus step: probability, move flag, direction, coordinate.
fn torus_steps(d: usize) -> Vec<(BigRational, bool, bool, usize)> {
    let p = r(1, 4 * d as i64);
    let mut out = Vec::new();
    for mov in [false, true] {
        for dir in [false, true] {
            for c in 0..d {
                out.push((p.clone(), mov, dir, c));
            }
        }
    }
    out
}

fn shift(pos: &[i64], c: usize, dir: bool, m: i64) -> Vec<i64> {
    let mut next = pos.to_vec();
    next[c] = (next[c] + if dir { 1 } else { -1 }).rem_euclid(m);
    next
}

/// Final position of the lazy walk on `(Z/m)^d`.
pub fn torus(start: &[i64], m: i64, k: u32) -> Dist<Vec<i64>> {
    let mut d: Dist<Vec<i64>> = [(start.to_vec(), BigRational::one())].into();
    for _ in 0..k {
        let mut next = Dist::new();
        for (pos, p) in &d {
            for (q, mov, dir, c) in torus_steps(start.len()) {
                let to = if mov {
                    shift(pos, c, dir, m)
                } else {
                    pos.clone()
                };
                bump(&mut next, to, p * q);
            }
        }
        d = next;
    }
    d
}

/// Probability that two walks, coupled coordinatewise (the second copies
/// the move flag in coordinates where they agree and flips it elsewhere),
/// still differ after `k` steps.
pub fn torus_apart(start1: &[i64], start2: &[i64], m: i64, k: u32) -> BigRational {
    let mut d: Dist<(Vec<i64>, Vec<i64>)> =
        [((start1.to_vec(), start2.to_vec()), BigRational::one())].into();
    for _ in 0..k {
        let mut next = Dist::new();
        for ((a, b), p) in &d {
            for (q, mov, dir, c) in torus_steps(start1.len()) {
                let mov2 = if a[c] == b[c] { mov } else { !mov };
                let a2 = if mov { shift(a, c, dir, m) } else { a.clone() };
                let b2 = if mov2 { shift(b, c, dir, m) } else { b.clone() };
                bump(&mut next, (a2, b2), p * q);
            }
        }
        d = next;
    }
    d.into_iter()
        .filter(|((a, b), _)| a != b)
        .map(|(_, p)| p)
        .sum()
}

pub fn binomial(k: u32, q: &BigRational) -> Dist {
    let mut d: Dist = [(0, BigRational::one())].into();
    for _ in 0..k {
        let mut next = Dist::new();
        for (&j, p) in &d {
            bump(&mut next, j + 1, p * q);
            bump(&mut next, j, p * (BigRational::one() - q));
        }
        d = next;
    }
    d
}

/// Birth-death chain moving down with probability `a` and up with `b`.
pub fn birth_death(start: i64, steps: u32, a: &BigRational, b: &BigRational) -> Dist {
    let stay = BigRational::one() - a - b;
    let mut d: Dist = [(start, BigRational::one())].into();
    for _ in 0..steps {
        let mut next = Dist::new();
        for (&s, p) in &d {
            bump(&mut next, s - 1, p * a);
            bump(&mut next, s + 1, p * b);
            bump(&mut next, s, p * &stay);
        }
        d = next;
    }
    d
}
