//! One line per acceptance criterion, each compared against the reference
//! computations in `common::oracles`. Exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::oracles::{self as o, r, Dist};
use prhl_core::case_studies::{build, run_case_study, Params, Report, NAMES};
use prhl_core::consequences::SdReport;
use prhl_core::dist::{lifting_exists, tv_distance, Coupling, SubDist, Value};
use prhl_core::prhl::{
    check, validate_semantics, Judgment, Method, ObligationResult, ProofScript, Status, Validity,
};
use prhl_core::pwhile::{
    equivalent_except, interpret, parse_program, pushforward, rewrite, Expr, Memory, Program,
    Transform,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn to_dist(d: &SubDist<Value>) -> Result<Dist, String> {
    d.iter()
        .map(|(v, p)| {
            v.as_i64()
                .map(|i| (i, p.ratio().clone()))
                .ok_or_else(|| format!("non-integer outcome {v}"))
        })
        .collect()
}

fn int_dist(weights: &[(i64, BigRational)]) -> SubDist<i64> {
    SubDist::from_weights(weights.iter().cloned()).expect("weights are a sub-distribution")
}

fn ints(v: &Value) -> Vec<i64> {
    match v {
        Value::Tuple(xs) | Value::List(xs) => xs.iter().filter_map(Value::as_i64).collect(),
        other => other.as_i64().into_iter().collect(),
    }
}

fn params(pairs: &[(&str, String)]) -> Params {
    pairs.iter().fold(Params::new(), |p, (k, v)| p.with(k, v))
}

fn run(name: &str, p: &Params) -> Result<Report, String> {
    let report = run_case_study(name, p).map_err(|e| format!("{name}: {e}"))?;
    ensure!(
        report.ok(),
        "{name} {:?} not ok: {}",
        report.params,
        report.to_json()
    );
    Ok(report)
}

fn check_named(report: &Report, what: &str) -> Result<(), String> {
    let c = report
        .checks
        .iter()
        .find(|c| c.what == what)
        .ok_or_else(|| format!("no check `{what}`"))?;
    ensure!(c.ok, "check `{what}` failed: {}", c.detail);
    Ok(())
}

fn obligation(report: &Report, what: &str, enumerated: bool) -> Result<(), String> {
    let found: Vec<_> = report
        .verdict
        .obligations
        .iter()
        .filter(|o| o.what == what)
        .collect();
    ensure!(!found.is_empty(), "{}: no obligation `{what}`", report.name);
    for ob in found {
        match &ob.result {
            ObligationResult::Discharged(Method::Enumerated { .. }) => {}
            ObligationResult::Discharged(_) if !enumerated => {}
            other => {
                return Err(format!(
                    "{}: `{what}` at {} is {other:?}",
                    report.name, ob.path
                ))
            }
        }
    }
    Ok(())
}

/// Checks both distributions of a dominance report against the oracle and
/// the witness against the report's own distributions.
fn sd_against(sd: &SdReport, upper: &Dist, lower: &Dist) -> Result<(), String> {
    let (u, l) = (to_dist(&sd.upper)?, to_dist(&sd.lower)?);
    ensure!(
        &u == upper,
        "{}: upper {u:?}, expected {upper:?}",
        sd.observable
    );
    ensure!(
        &l == lower,
        "{}: lower {l:?}, expected {lower:?}",
        sd.observable
    );
    ensure!(
        o::dominates(&u, &l),
        "{}: oracle finds no dominance",
        sd.observable
    );
    ensure!(sd.dominates, "{}: reported no dominance", sd.observable);
    let w = sd
        .witness
        .as_ref()
        .ok_or_else(|| format!("{}: no witness", sd.observable))?;
    ensure!(
        w.in_frechet(&sd.upper, &sd.lower),
        "{}: witness marginals differ",
        sd.observable
    );
    ensure!(
        w.support_within(|a: &Value, b: &Value| a >= b),
        "{}: witness leaves >=",
        sd.observable
    );
    Ok(())
}

fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<u32> {
    loop {
        let w: Vec<u32> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0
                } else {
                    rng.gen_range(1..5)
                }
            })
            .collect();
        if w.iter().any(|&x| x > 0) {
            return w;
        }
    }
}

fn scaled(w: &[u32], mass: &BigRational) -> Vec<(i64, BigRational)> {
    let total: u32 = w.iter().sum();
    w.iter()
        .enumerate()
        .map(|(i, &x)| (i as i64, mass * r(x as i64, total as i64)))
        .collect()
}

fn lifting_vs_cdf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ge = |a: &i64, b: &i64| a >= b;
    let (mut yes, mut no) = (0, 0);
    for round in 0..500 {
        let mass = [r(1, 1), r(1, 2), r(3, 4)][rng.gen_range(0..3)].clone();
        let w2 = random_weights(&mut rng, 6);
        let w1 = if round % 3 == 0 {
            // Push units of mass upward, which keeps dominance.
            let mut w = w2.clone();
            for _ in 0..rng.gen_range(0..4) {
                let from = rng.gen_range(0..5);
                if w[from] > 0 {
                    w[from] -= 1;
                    w[rng.gen_range(from + 1..6)] += 1;
                }
            }
            w
        } else {
            random_weights(&mut rng, 6)
        };
        let (a, b) = (scaled(&w1, &mass), scaled(&w2, &mass));
        let (mu1, mu2) = (int_dist(&a), int_dist(&b));
        let expected = o::dominates(&a.iter().cloned().collect(), &b.iter().cloned().collect());
        match lifting_exists(&ge, &mu1, &mu2) {
            Some(w) => {
                ensure!(expected, "witness for a non-dominating pair {a:?} {b:?}");
                ensure!(
                    w.in_frechet(&mu1, &mu2),
                    "witness outside the Frechet class for {a:?} {b:?}"
                );
                ensure!(
                    w.support_within(ge),
                    "witness support leaves >= for {a:?} {b:?}"
                );
                yes += 1;
            }
            None => {
                ensure!(!expected, "no witness for a dominating pair {a:?} {b:?}");
                no += 1;
            }
        }
    }
    ensure!(
        yes > 50 && no > 50,
        "unbalanced sample: {yes} liftable, {no} not"
    );
    Ok(format!("500 pairs, {yes} liftable, {no} not"))
}

fn tv_below_mismatch() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tight = 0;
    for round in 0..200 {
        let joint: SubDist<(i64, i64)> = if round % 4 == 0 {
            // Couplings produced by the flow solver.
            let (a, b) = (random_weights(&mut rng, 4), random_weights(&mut rng, 4));
            let (mu1, mu2) = (
                int_dist(&scaled(&a, &BigRational::one())),
                int_dist(&scaled(&b, &BigRational::one())),
            );
            let any = |_: &i64, _: &i64| true;
            lifting_exists(&any, &mu1, &mu2)
                .expect("the full relation always lifts")
                .into_joint()
        } else {
            let w = random_weights(&mut rng, 16);
            let mass = [r(1, 1), r(2, 3)][rng.gen_range(0..2)].clone();
            let cells = scaled(&w, &mass);
            SubDist::from_weights(cells.into_iter().map(|(i, p)| ((i / 4, i % 4), p)))
                .expect("sub-distribution")
        };
        let c = Coupling::new(joint);
        let (m1, m2) = (c.marginal1(), c.marginal2());
        let d1: Dist = m1.iter().map(|(a, p)| (*a, p.ratio().clone())).collect();
        let d2: Dist = m2.iter().map(|(a, p)| (*a, p.ratio().clone())).collect();
        let tv = o::tv(&d1, &d2);
        ensure!(
            tv_distance(&m1, &m2).ratio() == &tv,
            "library tv differs from the oracle on {d1:?} {d2:?}"
        );
        let mismatch = c.mismatch_probability().into_ratio();
        ensure!(tv <= mismatch, "tv {tv} exceeds mismatch {mismatch}");
        tight += usize::from(tv == mismatch);
    }
    Ok(format!("200 couplings, {tight} tight"))
}

fn random_walk() -> Outcome {
    let mut runs = 0;
    for k in 2..=4 {
        for n in 1..=2 {
            let p = params(&[
                ("k", k.to_string()),
                ("n", n.to_string()),
                ("start1", "0".into()),
            ]);
            let report = run("random-walk", &p)?;
            ensure!(
                report.tv.len() == 1,
                "expected one tv report, got {}",
                report.tv.len()
            );
            let tv = &report.tv[0];
            let want_tv = o::tv(&o::walk(0, k), &o::walk(2 * n, k));
            let want_bound = o::walk_misses(n, k);
            ensure!(
                tv.tv.ratio() == &want_tv,
                "k={k} n={n}: tv {} vs {want_tv}",
                tv.tv
            );
            ensure!(
                tv.bound.ratio() == &want_bound,
                "k={k} n={n}: bound {} vs {want_bound}",
                tv.bound
            );
            ensure!(
                tv.holds && want_tv <= want_bound,
                "k={k} n={n}: bound fails"
            );
            if k == 2 && n == 1 {
                ensure!(
                    want_tv == r(1, 2) && want_bound == r(1, 2),
                    "k=2 n=1 is not tight at 1/2"
                );
            }
            check_named(&report, "witness couplings preserve parity")?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, tv = bound = 1/2 at k=2 n=1"))
}

fn torus() -> Outcome {
    let mut pairs = 0;
    for d in 1..=2usize {
        for k in 2..=3u32 {
            for bits in 0..(1usize << d) {
                let delta: Vec<i64> = (0..d).map(|c| (bits >> c & 1) as i64).collect();
                let ds: Vec<String> = delta.iter().map(i64::to_string).collect();
                let p = params(&[
                    ("d", d.to_string()),
                    ("modulus", "3".into()),
                    ("k", k.to_string()),
                    ("delta", ds.join(",")),
                ]);
                let report = run("torus", &p)?;
                ensure!(
                    report.tv.len() == 3usize.pow(d as u32),
                    "d={d}: {} start pairs",
                    report.tv.len()
                );
                for tv in &report.tv {
                    let s1 = ints(&tv.left["start"]);
                    let s2 = ints(&tv.right["start"]);
                    let shifted: Vec<i64> = s1
                        .iter()
                        .zip(&delta)
                        .map(|(a, b)| (a + b).rem_euclid(3))
                        .collect();
                    ensure!(
                        s2 == shifted,
                        "start pair {s1:?} {s2:?} is not offset by {delta:?}"
                    );
                    let want_tv = o::tv(&o::torus(&s1, 3, k), &o::torus(&s2, 3, k));
                    let want_bound = o::torus_apart(&s1, &s2, 3, k);
                    ensure!(
                        tv.tv.ratio() == &want_tv,
                        "{s1:?} {s2:?} k={k}: tv {} vs {want_tv}",
                        tv.tv
                    );
                    ensure!(
                        tv.bound.ratio() == &want_bound,
                        "{s1:?} {s2:?} k={k}: bound {} vs {want_bound}",
                        tv.bound
                    );
                    ensure!(tv.holds, "{s1:?} {s2:?} k={k}: bound fails");
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} start pairs"))
}

fn biased_coins() -> Outcome {
    let mut runs = 0;
    for k in 2..=4u32 {
        for (q1, q2) in [(r(7, 10), r(2, 5)), (r(1, 2), r(1, 4))] {
            let p = params(&[
                ("k", k.to_string()),
                ("q1", q1.to_string()),
                ("q2", q2.to_string()),
            ]);
            let report = run("biased-coins", &p)?;
            check_named(&report, "first program coupled with the split program")?;
            check_named(&report, "split program equivalent to the second program")?;
            ensure!(
                report.verdict.status() == Status::Accepted,
                "composed judgment not accepted"
            );
            obligation(&report, "rewrite preserves the semantics", true)?;
            ensure!(report.sd.len() == 1, "expected one dominance report");
            sd_against(&report.sd[0], &o::binomial(k, &q1), &o::binomial(k, &q2))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs"))
}

fn bins() -> Outcome {
    for (n1, n2) in [(3u32, 2u32), (4, 2), (4, 4)] {
        let p = params(&[("n1", n1.to_string()), ("n2", n2.to_string())]);
        let report = run("bins", &p)?;
        check_named(&report, "loop split matches the split program")?;
        obligation(&report, "rewrite preserves the semantics", true)?;
        obligation(&report, "loop is lossless", false)?;
        ensure!(report.sd.len() == 2, "expected reports for both bins");
        let half = r(1, 2);
        for sd in &report.sd {
            sd_against(sd, &o::binomial(n1, &half), &o::binomial(n2, &half))?;
        }
    }
    Ok("3 runs, 6 coordinates".into())
}

fn rules_in(node: &serde_json::Value, out: &mut BTreeSet<String>) {
    if let Some(rule) = node.get("rule").and_then(serde_json::Value::as_str) {
        out.insert(rule.to_string());
    }
    match node {
        serde_json::Value::Object(m) => m.values().for_each(|v| rules_in(v, out)),
        serde_json::Value::Array(xs) => xs.iter().for_each(|v| rules_in(v, out)),
        _ => {}
    }
}

fn birth_death() -> Outcome {
    let (a, b) = (r(3, 10), r(1, 5));
    for steps in 1..=2u32 {
        for (s1, s2) in [(1i64, 0i64), (2, 0)] {
            let p = params(&[
                ("steps", steps.to_string()),
                ("a", a.to_string()),
                ("b", b.to_string()),
                ("start1", s1.to_string()),
                ("start2", s2.to_string()),
            ]);
            let report = run("birth-death", &p)?;
            check_named(&report, "adjacent table marginals match bd")?;
            check_named(&report, "(Left, Right) has probability 0")?;
            ensure!(
                report.verdict.status() == Status::Accepted,
                "proof not accepted"
            );
            let built = build("birth-death", &p).map_err(|e| e.to_string())?;
            let mut rules = BTreeSet::new();
            rules_in(&built.script["proof"], &mut rules);
            for rule in ["case", "equiv", "sample"] {
                ensure!(rules.contains(rule), "no `{rule}` rule among {rules:?}");
            }
            ensure!(report.sd.len() == 1, "expected one dominance report");
            sd_against(
                &report.sd[0],
                &o::birth_death(s1, steps, &a, &b),
                &o::birth_death(s2, steps, &a, &b),
            )?;
        }
    }
    Ok("4 runs".into())
}

fn soundness_sweep() -> Outcome {
    for name in NAMES {
        run(name, &Params::new())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dom = common::gen::domains();
    let (mut accepted, mut rejected, mut invalid) = (0, 0, 0);
    for _ in 0..400 {
        let case = common::gen::case(&mut rng);
        let left = parse_program(&case.left).map_err(|e| format!("{e} in\n{}", case.left))?;
        let right = parse_program(&case.right).map_err(|e| format!("{e} in\n{}", case.right))?;
        let script =
            ProofScript::from_json(&case.script).map_err(|e| format!("{e} in {}", case.script))?;
        let j = Judgment::from_script(left, right, &script);
        let verdict = check(&j, &script.proof, &dom, 8);
        let validity = validate_semantics(&j, &dom, 8);
        ensure!(
            !matches!(validity, Validity::Indeterminate { .. }),
            "indeterminate validity for {}",
            case.script
        );
        match verdict.status() {
            Status::Accepted => {
                ensure!(
                    validity.is_valid(),
                    "accepted but invalid:\n{}\n--\n{}\n{}\n{validity:?}",
                    case.left,
                    case.right,
                    case.script
                );
                accepted += 1;
            }
            Status::Rejected => {
                rejected += 1;
                invalid += usize::from(!validity.is_valid());
            }
            Status::Indeterminate => {
                return Err(format!("indeterminate verdict for {}", case.script))
            }
        }
    }
    ensure!(
        accepted >= 40,
        "only {accepted} of 400 random judgments accepted"
    );
    Ok(format!("5 studies, 400 random judgments: {accepted} accepted, {rejected} rejected ({invalid} invalid)"))
}

const COUNTER: &str = "\
var n, i, k, m : int;
var x : bool;

n := 0; i := 0;
while i < k do
  x ~~ Bern(P);
  if x then n := n + 1 fi
  i := i + 1;
end
return n
";

fn counter(p: &BigRational) -> Result<Program, String> {
    let src = COUNTER.replace('P', &format!("{}/{}", p.numer(), p.denom()));
    parse_program(&src).map_err(|e| e.to_string())
}

fn transformed(
    p: &Program,
    t: &serde_json::Value,
    path: &[usize],
) -> Result<(Program, BTreeSet<String>), String> {
    let t = Transform::from_json(t).map_err(|e| e.to_string())?;
    let rw = rewrite(&p.body, &p.decls, &t, path).map_err(|e| e.to_string())?;
    let scratch = rw.scratch.clone();
    Ok((
        Program {
            decls: rw.decls,
            body: rw.command,
            ret: p.ret.clone(),
        },
        scratch,
    ))
}

fn memory(k: i64, m: i64) -> Memory {
    [
        ("k".to_string(), Value::int(k)),
        ("m".to_string(), Value::int(m)),
    ]
    .into()
}

fn counts(p: &Program, mem: &Memory) -> Result<Dist, String> {
    let mu = interpret(&p.body, mem, 8).map_err(|e| e.to_string())?;
    to_dist(&pushforward(&mu, &Expr::var("n")).map_err(|e| e.to_string())?)
}

fn transforms() -> Outcome {
    let grid = [r(0, 1), r(1, 4), r(1, 2), r(3, 4), r(1, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for p in &grid {
        let prog = counter(p)?;
        for k in 0..=4 {
            for m in 0..=4 {
                let (split, _) =
                    transformed(&prog, &json!({"name": "loop-split", "cond": "i < m"}), &[2])?;
                let mem = memory(k, m);
                ensure!(
                    counts(&split, &mem)? == o::binomial(k as u32, p),
                    "loop split at {m}, k={k}, p={p}"
                );
                let eq = equivalent_except(&prog.body, &split.body, [&mem], &BTreeSet::new(), 8)
                    .map_err(|e| e.to_string())?;
                ensure!(eq.holds(), "loop split at {m} not equivalent: {eq:?}");
                checked += 1;
            }
        }
    }
    for _ in 0..60 {
        let (p1, p2) = (
            grid[rng.gen_range(0..5)].clone(),
            grid[rng.gen_range(0..5)].clone(),
        );
        let k = rng.gen_range(0..=4);
        let t = json!({"name": "coin-split", "p1": p1.to_string(), "p2": p2.to_string()});
        let prog = counter(&(&p1 * &p2))?;
        let (split, scratch) = transformed(&prog, &t, &[2, 0, 0])?;
        let mem = memory(k, 0);
        ensure!(
            counts(&split, &mem)? == o::binomial(k as u32, &(&p1 * &p2)),
            "coin split {p1} * {p2}, k={k}"
        );
        let eq = equivalent_except(&prog.body, &split.body, [&mem], &scratch, 8)
            .map_err(|e| e.to_string())?;
        ensure!(eq.holds(), "coin split {p1} * {p2} not equivalent: {eq:?}");
        // A coin whose bias is not the product must be told apart.
        let off = grid
            .iter()
            .find(|q| **q != &p1 * &p2)
            .expect("grid has two values");
        let wrong = counter(off)?;
        let (split, scratch) = transformed(&wrong, &t, &[2, 0, 0])?;
        let eq = equivalent_except(
            &wrong.body,
            &split.body,
            [&memory(k.max(1), 0)],
            &scratch,
            8,
        )
        .map_err(|e| e.to_string())?;
        ensure!(
            !eq.holds(),
            "coin split {p1} * {p2} accepted for bias {off}"
        );
        checked += 1;
    }
    Ok(format!("{checked} rewrites"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "lifting agrees with CDF dominance",
            Duration::from_secs(10),
            lifting_vs_cdf,
        ),
        (
            "tv is bounded by the mismatch probability",
            Duration::from_secs(5),
            tv_below_mismatch,
        ),
        ("random walk", Duration::from_secs(30), random_walk),
        ("torus", Duration::from_secs(60), torus),
        ("biased coins", Duration::from_secs(20), biased_coins),
        ("bins", Duration::from_secs(20), bins),
        ("birth-death", Duration::from_secs(30), birth_death),
        ("soundness sweep", Duration::from_secs(120), soundness_sweep),
        ("transform soundness", Duration::from_secs(10), transforms),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let verdict = match outcome {
            Ok(detail) if took <= *limit => format!("PASS ({took:.2?}) {detail}"),
            Ok(detail) => format!("FAIL ({took:.2?}, limit {limit:?}) {detail}"),
            Err(why) => format!("FAIL ({took:.2?}) {why}"),
        };
        failed += usize::from(verdict.starts_with("FAIL"));
        println!("criterion {}: {name}: {verdict}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
