//! `prhl`: interpret pWhile programs, check relational proofs, validate
//! judgments and extract distance and dominance reports.
//!
//! Exit codes: 0 when every verdict is positive, 1 when a check or
//! validation fails, 2 on usage, parse or configuration errors, 3 when an
//! enumeration cap or loop fuel prevents a decision.

mod render;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};
use thiserror::Error;

use prhl_core::case_studies::{self, CaseStudyError, Params};
use prhl_core::consequences::{sd_reports, tv_reports, ConsequenceError};
use prhl_core::dist::Value;
use prhl_core::prhl::{
    check, validate_semantics, Judgment, ProofScript, Status, Validity, VerifiedJudgment,
};
use prhl_core::pwhile::{
    coerce_memory, parse_program, pushforward, run, DomainDecl, InterpError, Memory, OnExhaustion,
    Program, Side,
};

use render::Format;

#[derive(Parser, Debug)]
#[command(
    name = "prhl",
    version,
    about = "Relational proofs about probabilistic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program from one memory and print its output distribution.
    Interpret {
        program: PathBuf,
        /// Initial memory as a JSON object, e.g. '{"k": 2}'.
        #[arg(long, default_value = "{}")]
        memory: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check a proof script for a pair of programs.
    Check(Pair),
    /// Decide the judgment of a script by exact execution, ignoring its proof.
    Validate(Pair),
    /// Check the proof, then report distances for every initial pair.
    TvReport(Pair),
    /// Check the proof, then report dominance for every initial pair.
    SdReport(Pair),
    /// Run one of the packaged case studies.
    CaseStudy {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(case_studies::NAMES))]
        name: String,
        /// Study parameter as name=value; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Override the study's loop fuel.
        #[arg(long)]
        fuel: Option<usize>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        cap: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct Opts {
    /// Iterations allowed to each loop.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct Pair {
    left: PathBuf,
    right: PathBuf,
    /// Proof script; its `pre` and `post` form the judgment.
    #[arg(long)]
    proof: PathBuf,
    /// Domains of the input variables (schema prhl-domains/1).
    #[arg(long)]
    domains: Option<PathBuf>,
    /// Maximum number of assignments visited per enumeration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    cap: Option<u64>,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Capacity(String),
}

impl CliError {
    fn usage(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
        CliError::Usage(format!("{context}: {e}"))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Capacity(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Capacity(_) => "capacity",
        }
    }
}

impl From<CaseStudyError> for CliError {
    fn from(e: CaseStudyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ConsequenceError> for CliError {
    fn from(e: ConsequenceError) -> Self {
        if e.is_capacity() {
            CliError::Capacity(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Positive,
    Negative,
    Undecided,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Positive => 0,
            Outcome::Negative => 1,
            Outcome::Undecided => 3,
        }
    }

    fn of_status(s: Status) -> Outcome {
        match s {
            Status::Accepted => Outcome::Positive,
            Status::Rejected => Outcome::Negative,
            Status::Indeterminate => Outcome::Undecided,
        }
    }
}

/// An exit outcome with the text to print.
type Settled = (Outcome, String);

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(path.display(), e))
}

fn read_json(path: &Path) -> Result<Json, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::usage(path.display(), e))
}

fn program(path: &Path) -> Result<Program, CliError> {
    parse_program(&read(path)?).map_err(|e| CliError::usage(path.display(), e))
}

/// The judgment of the script, with domains from the file merged with
/// those declared inline in the programs.
fn load(pair: &Pair) -> Result<(Judgment, ProofScript, DomainDecl), CliError> {
    let (left, right) = (program(&pair.left)?, program(&pair.right)?);
    let script = ProofScript::from_json(&read_json(&pair.proof)?)
        .map_err(|e| CliError::usage(pair.proof.display(), e))?;
    let mut dom = match &pair.domains {
        Some(p) => {
            DomainDecl::from_json(&read_json(p)?).map_err(|e| CliError::usage(p.display(), e))?
        }
        None => DomainDecl::new(),
    };
    dom.absorb_inline(Some(Side::Left), &left.decls.domains);
    dom.absorb_inline(Some(Side::Right), &right.decls.domains);
    if let Some(cap) = pair.cap {
        dom = dom.with_cap(cap);
    }
    let j = Judgment::from_script(left, right, &script);
    if let Err(errors) = j.typecheck() {
        let all: Vec<String> = errors.iter().map(ToString::to_string).collect();
        return Err(CliError::Usage(format!(
            "ill-typed judgment: {}",
            all.join("; ")
        )));
    }
    Ok((j, script, dom))
}

fn memory(text: &str, p: &Program) -> Result<Memory, CliError> {
    let j: Json = serde_json::from_str(text).map_err(|e| CliError::usage("--memory", e))?;
    let Json::Object(fields) = j else {
        return Err(CliError::Usage("--memory: expected a JSON object".into()));
    };
    let raw = fields
        .iter()
        .map(|(k, v)| Value::from_json(v).map(|v| (k.clone(), v)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .map_err(|e| CliError::usage("--memory", e))?;
    coerce_memory(&raw, &p.decls).map_err(|e| CliError::usage("--memory", e))
}

fn interpret(path: &Path, mem: &str, opts: &Opts) -> Result<Settled, CliError> {
    let p = program(path)?;
    let m = memory(mem, &p)?;
    let out = run(&p.body, &m, opts.fuel as usize, OnExhaustion::Fail).map_err(|e| match e {
        InterpError::FuelExhausted { .. } => CliError::Capacity(e.to_string()),
        other => CliError::usage(path.display(), other),
    })?;
    let text = match &p.ret {
        Some(e) => {
            let d = pushforward(&out.dist, e).map_err(|err| CliError::usage("return", err))?;
            render::values(&d, opts.format)
        }
        None => render::memories(&out.dist, opts.format),
    };
    Ok((Outcome::Positive, text))
}

/// Checks the proof; a rejected or undecided verdict is the result.
fn verified(pair: &Pair) -> Result<Result<(VerifiedJudgment, DomainDecl), Settled>, CliError> {
    let (j, script, dom) = load(pair)?;
    match prhl_core::prhl::check_proof(&j, &script.proof, &dom, pair.opts.fuel as usize) {
        Ok(vj) => Ok(Ok((vj, dom))),
        Err(v) => Ok(Err((
            Outcome::of_status(v.status()),
            render::verdict(&v, pair.opts.format),
        ))),
    }
}

fn execute(cmd: &Command) -> Result<Settled, CliError> {
    match cmd {
        Command::Interpret {
            program,
            memory,
            opts,
        } => interpret(program, memory, opts),
        Command::Check(pair) => {
            let (j, script, dom) = load(pair)?;
            let v = check(&j, &script.proof, &dom, pair.opts.fuel as usize);
            Ok((
                Outcome::of_status(v.status()),
                render::verdict(&v, pair.opts.format),
            ))
        }
        Command::Validate(pair) => {
            let (j, _, dom) = load(pair)?;
            let v = validate_semantics(&j, &dom, pair.opts.fuel as usize);
            let outcome = match v {
                Validity::Valid { .. } => Outcome::Positive,
                Validity::Invalid { .. } => Outcome::Negative,
                Validity::Indeterminate { .. } => Outcome::Undecided,
            };
            Ok((outcome, render::validity(&v, pair.opts.format)))
        }
        Command::TvReport(pair) => match verified(pair)? {
            Err(rejected) => Ok(rejected),
            Ok((vj, dom)) => {
                let reports = tv_reports(&vj, &dom, pair.opts.fuel as usize)?;
                let all = reports.iter().all(|r| r.holds);
                Ok((
                    if all {
                        Outcome::Positive
                    } else {
                        Outcome::Negative
                    },
                    render::tv(&reports, pair.opts.format),
                ))
            }
        },
        Command::SdReport(pair) => match verified(pair)? {
            Err(rejected) => Ok(rejected),
            Ok((vj, dom)) => {
                let reports = sd_reports(&vj, &dom, pair.opts.fuel as usize)?;
                let all = reports.iter().all(|r| r.dominates);
                Ok((
                    if all {
                        Outcome::Positive
                    } else {
                        Outcome::Negative
                    },
                    render::sd(&reports, pair.opts.format),
                ))
            }
        },
        Command::CaseStudy {
            name,
            params,
            fuel,
            cap,
            format,
        } => {
            let params = Params::parse(params.iter().map(String::as_str))?;
            let mut built = case_studies::build(name, &params)?;
            if let Some(f) = fuel {
                built.fuel = *f;
            }
            if let Some(c) = cap {
                built.domains = built.domains.with_cap(*c);
            }
            let report = case_studies::run_built(&built)?;
            let outcome = if report.ok() {
                Outcome::Positive
            } else if report.indeterminate() {
                Outcome::Undecided
            } else {
                Outcome::Negative
            };
            Ok((outcome, render::case_study(&report, *format)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok((outcome, text)) => {
            print!("{text}");
            if outcome != Outcome::Positive {
                let status = if outcome == Outcome::Negative {
                    "failed"
                } else {
                    "indeterminate"
                };
                eprintln!(
                    "{}",
                    json!({"error": status, "message": "see the report on standard output"})
                );
            }
            ExitCode::from(outcome.code())
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(e.code())
        }
    }
}
