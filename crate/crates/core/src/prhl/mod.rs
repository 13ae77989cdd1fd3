//! Relational judgments, their proofs and a checker for them.

pub mod checker;
pub mod proof;
pub mod space;
pub mod validate;

use serde_json::{Map, Value as Json};

use crate::pwhile::typecheck::check_assertion;
use crate::pwhile::{typecheck, Expr, Memory, Program, TypeError};

pub use checker::{
    check, check_proof, Counterexample, Method, Obligation, ObligationResult, Status, Verdict,
    VerifiedJudgment, VERDICT_SCHEMA,
};
pub use proof::{ProofFormatError, ProofNode, ProofScript, SeqPart, PROOF_SCHEMA};
pub use space::{Entailment, EvalAt, Search, Space, SpaceError};
pub use validate::{input_vars, validate_semantics, validate_with, Validity, Witness};

/// `{pre} left ~ right {post}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub left: Program,
    pub right: Program,
    pub pre: Expr,
    pub post: Expr,
}

impl Judgment {
    pub fn new(left: Program, right: Program, pre: Expr, post: Expr) -> Self {
        Judgment {
            left,
            right,
            pre,
            post,
        }
    }

    pub fn from_script(left: Program, right: Program, script: &ProofScript) -> Self {
        Judgment::new(left, right, script.pre.clone(), script.post.clone())
    }

    pub fn typecheck(&self) -> Result<(), Vec<TypeError>> {
        let mut errors = Vec::new();
        for p in [&self.left, &self.right] {
            if let Err(es) = typecheck(p) {
                errors.extend(es);
            }
        }
        for a in [&self.pre, &self.post] {
            if let Err(e) = check_assertion(a, &self.left.decls, &self.right.decls) {
                errors.push(e);
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

pub fn memory_json(m: &Memory) -> Json {
    Json::Object(
        m.iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect::<Map<_, _>>(),
    )
}
