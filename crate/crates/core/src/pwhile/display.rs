//! Concrete-syntax printing. Output re-parses to the same tree.

use std::fmt::{self, Display, Formatter, Write};

use num_traits::Signed;

use super::ast::{BinOp, Command, DistExpr, Expr, Quant, UnOp};
use crate::dist::Value;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Quant(..) => 0,
        Expr::Binary(BinOp::Implies | BinOp::Iff, ..) => 0,
        Expr::Cond(..) => 1,
        Expr::Binary(BinOp::Or, ..) => 2,
        Expr::Binary(BinOp::And, ..) => 3,
        Expr::Unary(UnOp::Not, _) => 4,
        Expr::Binary(BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, ..) => {
            5
        }
        Expr::Binary(BinOp::Cons, ..) => 6,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 7,
        Expr::Binary(BinOp::Mul | BinOp::Div | BinOp::Mod, ..) => 8,
        Expr::Lit(Value::Rat(_)) => 8,
        Expr::Unary(UnOp::Neg, _) => 9,
        Expr::Lit(Value::Int(i)) if i.is_negative() => 9,
        _ => 11,
    }
}

fn write_at(f: &mut Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_list(f: &mut Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write_at(f, x, 0)?;
    }
    Ok(())
}

fn write_expr(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Lit(v) => write!(f, "{v}"),
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Unary(UnOp::Not, a) => {
            write!(f, "!")?;
            write_at(f, a, 4)
        }
        Expr::Unary(UnOp::Neg, a) => {
            write!(f, "-")?;
            write_at(f, a, 10)
        }
        Expr::Binary(op, a, b) => {
            let p = prec(e);
            let (l, r) = match op {
                BinOp::Implies | BinOp::Iff => (1, 0),
                BinOp::Cons => (7, 6),
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => (6, 6),
                _ => (p, p + 1),
            };
            write_at(f, a, l)?;
            write!(f, " {} ", op.symbol())?;
            write_at(f, b, r)
        }
        Expr::Cond(c, a, b) => {
            write_at(f, c, 2)?;
            write!(f, " ? ")?;
            write_at(f, a, 1)?;
            write!(f, " : ")?;
            write_at(f, b, 1)
        }
        Expr::Tuple(items) => {
            write!(f, "(")?;
            write_list(f, items)?;
            if items.len() == 1 {
                write!(f, ",")?;
            }
            write!(f, ")")
        }
        Expr::List(items) => {
            write!(f, "[")?;
            write_list(f, items)?;
            write!(f, "]")
        }
        Expr::Proj(a, k) => {
            write_at(f, a, 10)?;
            write!(f, ".{k}")
        }
        Expr::Index(a, i) => {
            write_at(f, a, 10)?;
            write!(f, "[")?;
            write_at(f, i, 0)?;
            write!(f, "]")
        }
        Expr::Call(name, args) => {
            write!(f, "{name}(")?;
            write_list(f, args)?;
            write!(f, ")")
        }
        Expr::Quant(q, x, lo, hi, body) => {
            let kw = match q {
                Quant::Forall => "forall",
                Quant::Exists => "exists",
            };
            write!(f, "{kw} {x} in [")?;
            write_at(f, lo, 0)?;
            write!(f, ", ")?;
            write_at(f, hi, 0)?;
            write!(f, "]. ")?;
            write_at(f, body, 0)
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl Display for DistExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            DistExpr::Bern(p) => write!(f, "Bern({p})"),
            DistExpr::UniformSet(xs) => {
                write!(f, "{{")?;
                write_list(f, xs)?;
                write!(f, "}}")
            }
            DistExpr::UniformRange(lo, hi) => write!(f, "[{lo}, {hi}]"),
            DistExpr::Table(rows) => {
                write!(f, "{{")?;
                for (i, (v, w)) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}: {w}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

fn write_cmd(out: &mut String, c: &Command, depth: usize) {
    let pad = "  ".repeat(depth);
    match c {
        Command::Skip => {
            let _ = write!(out, "{pad}skip");
        }
        Command::Assign(x, e) => {
            let _ = write!(out, "{pad}{x} := {e}");
        }
        Command::Rand(x, d) => {
            let _ = write!(out, "{pad}{x} ~~ {d}");
        }
        Command::If(e, a, b) => {
            let _ = writeln!(out, "{pad}if {e} then");
            write_cmd(out, a, depth + 1);
            if **b != Command::Skip {
                let _ = write!(out, "\n{pad}else\n");
                write_cmd(out, b, depth + 1);
            }
            let _ = write!(out, "\n{pad}fi");
        }
        Command::While(e, body) => {
            let _ = writeln!(out, "{pad}while {e} do");
            write_cmd(out, body, depth + 1);
            let _ = write!(out, "\n{pad}end");
        }
        Command::Seq(items) => {
            for (i, s) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(";\n");
                }
                write_cmd(out, s, depth);
            }
        }
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_cmd(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl Command {
    /// Single-line rendering for diagnostics.
    pub fn summary(&self) -> String {
        let text = self
            .to_string()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if text.chars().count() > 80 {
            format!("{}...", text.chars().take(77).collect::<String>())
        } else {
            text
        }
    }
}
