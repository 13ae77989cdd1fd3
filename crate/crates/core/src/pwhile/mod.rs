//! The probabilistic While language: syntax, typing, exact semantics and
//! equivalence-preserving rewrites.

pub mod ast;
mod display;
pub mod domain;
pub mod equiv;
pub mod eval;
pub mod functions;
pub mod interp;
mod lexer;
pub mod parser;
pub mod transform;
pub mod typecheck;

use thiserror::Error;

pub use ast::{BinOp, Command, Decls, DistExpr, Expr, Program, Quant, Side, Type, UnOp, Var};
pub use domain::{Domain, DomainDecl, DomainError, Memory};
pub use equiv::{equivalent_except, semantically_equivalent, Equivalence};
pub use eval::{eval_assertion, eval_dist, eval_expr, EvalError};
pub use interp::{
    interpret, is_lossless, pushforward, run, InterpError, Lossless, OnExhaustion, Outcome,
};
pub use parser::{parse_expr_in, parse_program, parse_relational, parse_relational_dist};
pub use transform::{apply_transform, rewrite, Rewrite, Transform, TransformError};
pub use typecheck::{coerce, coerce_memory, typecheck, TypeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unknown identifier {0}")]
    UnknownIdent(String),
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{name} expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, msg: &str) -> ParseError {
        ParseError::Syntax {
            line,
            col,
            msg: msg.to_string(),
        }
    }
}
