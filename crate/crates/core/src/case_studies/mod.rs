//! The packaged case studies: programs, domains and proof scripts built from
//! parameters, and runners that check, validate and draw conclusions.

mod biased_coins;
mod bins;
mod birth_death;
mod random_walk;
mod torus;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::consequences::{sd_reports, tv_reports, ConsequenceError, SdReport, TvReport};
use crate::dist::parse_ratio;
use crate::prhl::{
    Judgment, ProofFormatError, ProofScript, Status, Validity, Verdict, VerifiedJudgment,
};
use crate::pwhile::{parse_program, DomainDecl, DomainError, ParseError, Program};

pub use birth_death::{dcouple_table, distr_adjacent_verbatim, DcoupleError, Move};

pub const REPORT_SCHEMA: &str = "prhl-case-study/1";
pub const NAMES: [&str; 5] = [
    "random-walk",
    "torus",
    "biased-coins",
    "bins",
    "birth-death",
];

#[derive(Debug, Error)]
pub enum CaseStudyError {
    #[error("unknown case study `{0}` (known: {list})", list = NAMES.join(", "))]
    Unknown(String),
    #[error("parameter {name}: {msg}")]
    Param { name: String, msg: String },
    #[error("malformed parameter `{0}`, expected name=value")]
    Malformed(String),
    #[error("program {file}: {err}")]
    Program { file: String, err: ParseError },
    #[error(transparent)]
    Proof(#[from] ProofFormatError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Consequence(Box<ConsequenceError>),
    #[error(transparent)]
    Dcouple(#[from] DcoupleError),
}

fn param_err(name: &str, msg: impl Into<String>) -> CaseStudyError {
    CaseStudyError::Param {
        name: name.to_string(),
        msg: msg.into(),
    }
}

/// `name=value` parameters; unset ones take the study's defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, String>);

impl From<ConsequenceError> for CaseStudyError {
    fn from(e: ConsequenceError) -> Self {
        CaseStudyError::Consequence(Box::new(e))
    }
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn parse<'a, I: IntoIterator<Item = &'a str>>(items: I) -> Result<Self, CaseStudyError> {
        let mut out = Params::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CaseStudyError::Malformed(item.to_string()))?;
            out.0.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn with(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.0.insert(name.to_string(), value.to_string());
        self
    }

    fn check_known(&self, known: &[&str]) -> Result<(), CaseStudyError> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(param_err(
                k,
                format!(
                    "not a parameter of this study (expected one of {})",
                    known.join(", ")
                ),
            )),
            None => Ok(()),
        }
    }

    fn int(&self, name: &str, default: i64, lo: i64, hi: i64) -> Result<i64, CaseStudyError> {
        let v = match self.0.get(name) {
            None => default,
            Some(s) => s
                .parse()
                .map_err(|_| param_err(name, format!("`{s}` is not an integer")))?,
        };
        if v < lo || v > hi {
            return Err(param_err(name, format!("{v} is outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn prob(&self, name: &str, default: BigRational) -> Result<BigRational, CaseStudyError> {
        let v = match self.0.get(name) {
            None => default,
            Some(s) => {
                parse_ratio(s).ok_or_else(|| param_err(name, format!("`{s}` is not a rational")))?
            }
        };
        if v < BigRational::from_integer(0.into()) || v > BigRational::from_integer(1.into()) {
            return Err(param_err(name, format!("{v} is outside [0, 1]")));
        }
        Ok(v)
    }

    fn ints(
        &self,
        name: &str,
        default: &[i64],
        len: usize,
        lo: i64,
        hi: i64,
    ) -> Result<Vec<i64>, CaseStudyError> {
        let vs: Vec<i64> = match self.0.get(name) {
            None => default.to_vec(),
            Some(s) => s
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| param_err(name, format!("`{x}` is not an integer")))
                })
                .collect::<Result<_, _>>()?,
        };
        if vs.len() != len {
            return Err(param_err(
                name,
                format!("expected {len} comma-separated values, got {}", vs.len()),
            ));
        }
        if let Some(v) = vs.iter().find(|v| **v < lo || **v > hi) {
            return Err(param_err(name, format!("{v} is outside [{lo}, {hi}]")));
        }
        Ok(vs)
    }
}

/// Rational literal in the concrete syntax.
pub(crate) fn rat_src(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Which conclusion a study draws from its judgment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conclusion {
    Tv,
    Sd,
}

/// Everything needed to check a study: program sources, domains, the
/// proof script and the fuel for loops.
#[derive(Clone, Debug)]
pub struct Built {
    pub name: &'static str,
    pub params: BTreeMap<String, String>,
    /// File name and source of each program; the first two form the
    /// judgment.
    pub programs: Vec<(String, String)>,
    pub domains: DomainDecl,
    pub script: Json,
    pub fuel: usize,
    pub conclusion: Conclusion,
}

impl Built {
    pub fn program(&self, i: usize) -> Result<Program, CaseStudyError> {
        let (file, src) = &self.programs[i];
        parse_program(src).map_err(|err| CaseStudyError::Program {
            file: file.clone(),
            err,
        })
    }

    pub fn judgment(&self) -> Result<(Judgment, ProofScript), CaseStudyError> {
        let script = ProofScript::from_json(&self.script)?;
        let j = Judgment::from_script(self.program(0)?, self.program(1)?, &script);
        Ok((j, script))
    }
}

/// Builds a study's artifacts from parameters, validating them.
pub fn build(name: &str, params: &Params) -> Result<Built, CaseStudyError> {
    match name {
        "random-walk" => random_walk::build(params),
        "torus" => torus::build(params),
        "biased-coins" => biased_coins::build(params),
        "bins" => bins::build(params),
        "birth-death" => birth_death::build(params),
        other => Err(CaseStudyError::Unknown(other.to_string())),
    }
}

/// A named side check of a study beyond the main judgment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub what: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(what: &str, ok: bool, detail: impl Into<String>) -> Check {
        Check {
            what: what.to_string(),
            ok,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub name: &'static str,
    pub params: BTreeMap<String, String>,
    pub verdict: Verdict,
    pub validity: Validity,
    pub tv: Vec<TvReport>,
    pub sd: Vec<SdReport>,
    pub checks: Vec<Check>,
}

impl Report {
    /// Accepted proof, valid semantics, every conclusion and side check.
    pub fn ok(&self) -> bool {
        self.verdict.status() == Status::Accepted
            && self.validity.is_valid()
            && self.tv.iter().all(|r| r.holds)
            && self.sd.iter().all(|r| r.dominates && r.witness.is_some())
            && self.checks.iter().all(|c| c.ok)
    }

    /// Whether the failure is only due to enumeration caps or fuel.
    pub fn indeterminate(&self) -> bool {
        !self.ok()
            && self.verdict.status() != Status::Rejected
            && !matches!(self.validity, Validity::Invalid { .. })
            && (self.verdict.status() == Status::Indeterminate
                || matches!(self.validity, Validity::Indeterminate { .. }))
    }

    pub fn to_json(&self) -> Json {
        json!({
            "schema": REPORT_SCHEMA,
            "name": self.name,
            "params": self.params,
            "ok": self.ok(),
            "proof": self.verdict.to_json(),
            "validity": self.validity.to_json(),
            "tv": self.tv.iter().map(TvReport::to_json).collect::<Vec<_>>(),
            "sd": self.sd.iter().map(SdReport::to_json).collect::<Vec<_>>(),
            "checks": self.checks.iter().map(|c| json!({"what": c.what, "ok": c.ok, "detail": c.detail})).collect::<Vec<_>>(),
        })
    }

    /// The parts of the report kept in a study's `expected.json`.
    pub fn summary(&self) -> Json {
        let mut s = Map::new();
        s.insert("proof".into(), json!(self.verdict.status().as_str()));
        s.insert("obligations".into(), json!(self.verdict.obligations.len()));
        s.insert("valid".into(), json!(self.validity.is_valid()));
        if !self.tv.is_empty() {
            s.insert(
                "tv".into(),
                self.tv
                    .iter()
                    .map(|r| json!({"tv": r.tv.to_string(), "bound": r.bound.to_string(), "holds": r.holds}))
                    .collect(),
            );
        }
        if !self.sd.is_empty() {
            s.insert(
                "sd".into(),
                self.sd.iter().map(|r| json!({"observable": r.observable.to_string(), "dominates": r.dominates})).collect(),
            );
        }
        s.insert(
            "checks".into(),
            self.checks
                .iter()
                .map(|c| json!({"what": c.what, "ok": c.ok}))
                .collect(),
        );
        Json::Object(s)
    }
}

/// Checks the proof, validates the judgment semantically and, when the
/// proof is accepted, extracts the study's conclusion.
pub fn run_built(b: &Built) -> Result<Report, CaseStudyError> {
    let (j, script) = b.judgment()?;
    let checked = crate::prhl::check_proof(&j, &script.proof, &b.domains, b.fuel);
    let verdict = match &checked {
        Ok(vj) => vj.verdict().clone(),
        Err(v) => v.clone(),
    };
    let validity = crate::prhl::validate_semantics(&j, &b.domains, b.fuel);
    let mut report = Report {
        name: b.name,
        params: b.params.clone(),
        verdict,
        validity,
        tv: Vec::new(),
        sd: Vec::new(),
        checks: Vec::new(),
    };
    if let Ok(vj) = &checked {
        conclude(b, vj, &mut report)?;
    }
    match b.name {
        "biased-coins" => report.checks.extend(biased_coins::side_checks(b)?),
        "bins" => report.checks.extend(bins::side_checks(b)?),
        "birth-death" => report.checks.extend(birth_death::side_checks(b)?),
        "random-walk" => report.checks.extend(random_walk::side_checks(b, &j)?),
        _ => {}
    }
    Ok(report)
}

fn conclude(b: &Built, vj: &VerifiedJudgment, report: &mut Report) -> Result<(), CaseStudyError> {
    match b.conclusion {
        Conclusion::Tv => report.tv = tv_reports(vj, &b.domains, b.fuel)?,
        Conclusion::Sd => report.sd = sd_reports(vj, &b.domains, b.fuel)?,
    }
    Ok(())
}

pub fn run_case_study(name: &str, params: &Params) -> Result<Report, CaseStudyError> {
    run_built(&build(name, params)?)
}

/// The files of a study directory, with their contents.
pub fn files(b: &Built) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = b.programs.clone();
    let pretty = |j: &Json| serde_json::to_string_pretty(j).expect("json values serialize") + "\n";
    out.push(("domains.json".into(), pretty(&b.domains.to_json())));
    let mut script = b.script.clone();
    script["schema"] = json!(crate::prhl::PROOF_SCHEMA);
    out.push(("proof.json".into(), pretty(&script)));
    out
}
