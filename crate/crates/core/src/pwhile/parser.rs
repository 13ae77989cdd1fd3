use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::{
    BinOp, Command, Decls, DistExpr, DistMacro, Expr, Program, Quant, Type, UnOp, Var,
};
use super::domain::Domain;
use super::functions;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::dist::Value;

const KEYWORDS: &[&str] = &[
    "var", "enum", "dist", "if", "then", "else", "fi", "while", "do", "end", "skip", "return",
    "true", "false", "not", "and", "or", "mod", "forall", "exists", "in",
];

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src, false)?;
    p.decls_block()?;
    let body = p.stmts()?;
    let ret = if p.eat_kw("return") {
        let e = p.expr()?;
        p.eat_sym(";");
        Some(e)
    } else {
        None
    };
    p.expect_eof()?;
    Ok(Program {
        decls: p.decls,
        body,
        ret,
    })
}

/// Parses a relational assertion or expression. Tagged names are program
/// variables; other bare identifiers are quantifier-bound variables, names
/// listed in `bound`, or enum constants.
pub fn parse_relational(src: &str, bound: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src, true)?;
    p.bound = bound.iter().map(|s| s.to_string()).collect();
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_relational_dist(src: &str) -> Result<DistExpr, ParseError> {
    let mut p = Parser::new(src, true)?;
    let d = p.dist()?;
    p.expect_eof()?;
    Ok(d)
}

/// Parses a plain expression against the declarations of a program.
pub fn parse_expr_in(src: &str, decls: &Decls) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src, false)?;
    p.decls = decls.clone();
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    relational: bool,
    decls: Decls,
    bound: Vec<String>,
}

impl Parser {
    fn new(src: &str, relational: bool) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            relational,
            decls: Decls::default(),
            bound: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl AsRef<str>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError::syntax(t.line, t.col, msg.as_ref()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", describe(self.peek())))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => self.err(format!("unexpected {}", describe(other))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.next();
                Ok(name)
            }
            other => self.err(format!(
                "expected an identifier, found {}",
                describe(&other)
            )),
        }
    }

    fn int_lit(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym("-");
        match self.next() {
            Tok::Int(i) => {
                let v: i64 =
                    i64::try_from(i).or_else(|_| self.err("integer literal out of range"))?;
                Ok(if neg { -v } else { v })
            }
            other => self.err(format!("expected an integer, found {}", describe(&other))),
        }
    }

    // ---- declarations ----

    fn decls_block(&mut self) -> Result<(), ParseError> {
        loop {
            if self.eat_kw("var") {
                let mut names = vec![self.ident()?];
                while self.eat_sym(",") {
                    names.push(self.ident()?);
                }
                self.expect_sym(":")?;
                let ty = self.ty()?;
                let dom = if self.eat_kw("in") {
                    self.expect_sym("[")?;
                    let lo = self.int_lit()?;
                    self.expect_sym(",")?;
                    let hi = self.int_lit()?;
                    self.expect_sym("]")?;
                    Some(Domain::Int(lo, hi))
                } else {
                    None
                };
                self.expect_sym(";")?;
                for n in names {
                    if self.decls.vars.insert(n.clone(), ty.clone()).is_some() {
                        return self.err(format!("variable {n} declared twice"));
                    }
                    if let Some(d) = &dom {
                        self.decls.domains.insert(n, d.clone());
                    }
                }
            } else if self.eat_kw("enum") {
                let name = self.ident()?;
                self.expect_sym("=")?;
                let mut variants = vec![self.ident()?];
                while self.eat_sym("|") {
                    variants.push(self.ident()?);
                }
                self.expect_sym(";")?;
                for v in &variants {
                    if self.decls.enum_of(v).is_some() {
                        return self.err(format!("enum constant {v} declared twice"));
                    }
                }
                self.decls.enums.insert(name, variants);
            } else if self.eat_kw("dist") {
                let name = self.ident()?;
                let mut params = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        params.push(self.ident()?);
                        while self.eat_sym(",") {
                            params.push(self.ident()?);
                        }
                    }
                    self.expect_sym(")")?;
                }
                self.expect_sym("=")?;
                let saved = std::mem::replace(&mut self.bound, params.clone());
                let body = self.dist();
                self.bound = saved;
                let body = body?;
                self.expect_sym(";")?;
                self.decls.dists.insert(name, DistMacro { params, body });
            } else {
                return Ok(());
            }
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        if self.eat_sym("(") {
            let mut ts = vec![self.ty()?];
            while self.eat_sym(",") {
                ts.push(self.ty()?);
            }
            self.expect_sym(")")?;
            return Ok(Type::Tuple(ts));
        }
        let name = self.ident()?;
        match name.as_str() {
            "int" => Ok(Type::Int),
            "bool" => Ok(Type::Bool),
            "rat" => Ok(Type::Rat),
            "list" | "vec" => {
                self.expect_sym("<")?;
                let inner = Box::new(self.ty()?);
                self.expect_sym(">")?;
                Ok(if name == "list" {
                    Type::List(inner)
                } else {
                    Type::Vec(inner)
                })
            }
            other if self.decls.enums.contains_key(other) => Ok(Type::Enum(name)),
            other => self.err(format!("unknown type {other}")),
        }
    }

    // ---- statements ----

    fn at_block_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
            || ["else", "fi", "end", "return"]
                .iter()
                .any(|k| self.is_kw(k))
    }

    fn stmts(&mut self) -> Result<Command, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.at_block_end() {
                break;
            }
            out.push(self.stmt()?);
            if !self.eat_sym(";") && !self.at_block_end() {
                // Statements ending in `fi`/`end` need no separator.
                if !matches!(out.last(), Some(Command::If(..) | Command::While(..))) {
                    return self.err(format!("expected ';', found {}", describe(self.peek())));
                }
            }
        }
        Ok(Command::seq(out))
    }

    fn stmt(&mut self) -> Result<Command, ParseError> {
        if self.eat_kw("skip") {
            return Ok(Command::Skip);
        }
        if self.eat_kw("if") {
            return self.if_rest();
        }
        if self.eat_kw("while") {
            let guard = self.expr()?;
            self.expect_kw("do")?;
            self.eat_sym(":");
            let body = self.stmts()?;
            self.expect_kw("end")?;
            return Ok(Command::While(guard, Box::new(body)));
        }
        let mut names = vec![self.assignable()?];
        while self.eat_sym(",") {
            names.push(self.assignable()?);
        }
        if self.eat_sym(":=") {
            let e = self.expr()?;
            return Ok(Command::seq(
                names.into_iter().map(|n| Command::Assign(n, e.clone())),
            ));
        }
        if names.len() > 1 {
            return self.err("expected ':=' after a list of variables");
        }
        let x = names.pop().unwrap();
        if self.eat_sym("~~") {
            let d = self.dist()?;
            let d = match self.decls.vars.get(&x) {
                Some(Type::Bool) => coerce_bits(d),
                _ => d,
            };
            return Ok(Command::Rand(x, d));
        }
        let op = if self.eat_sym("++") {
            BinOp::Add
        } else if self.eat_sym("--") {
            BinOp::Sub
        } else {
            return self.err(format!(
                "expected ':=', '~~', '++' or '--', found {}",
                describe(self.peek())
            ));
        };
        Ok(Command::Assign(
            x.clone(),
            Expr::bin(op, Expr::var(&x), Expr::int(1)),
        ))
    }

    /// After `if`: the guard, branches and the closing `fi`. An `else if`
    /// chain shares the final `fi`.
    fn if_rest(&mut self) -> Result<Command, ParseError> {
        let guard = self.expr()?;
        self.expect_kw("then")?;
        let then = self.stmts()?;
        let els = if self.eat_kw("else") {
            if self.eat_kw("if") {
                return Ok(Command::If(
                    guard,
                    Box::new(then),
                    Box::new(self.if_rest()?),
                ));
            }
            self.stmts()?
        } else {
            Command::Skip
        };
        self.expect_kw("fi")?;
        Ok(Command::If(guard, Box::new(then), Box::new(els)))
    }

    fn assignable(&mut self) -> Result<String, ParseError> {
        let name = self.ident()?;
        if !self.relational && !self.decls.vars.contains_key(&name) {
            return Err(ParseError::UnknownIdent(name));
        }
        Ok(name)
    }

    // ---- distributions ----

    fn dist(&mut self) -> Result<DistExpr, ParseError> {
        if self.is_kw("Bern") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.next();
            self.next();
            let p = self.expr()?;
            self.expect_sym(")")?;
            return Ok(DistExpr::Bern(p));
        }
        if self.eat_sym("[") {
            let lo = self.expr()?;
            self.expect_sym(",")?;
            let hi = self.expr()?;
            self.expect_sym("]")?;
            return Ok(DistExpr::UniformRange(lo, hi));
        }
        if self.eat_sym("{") {
            let first = self.expr()?;
            if self.eat_sym(":") {
                let mut rows = vec![(first, self.expr()?)];
                while self.eat_sym(",") {
                    let v = self.expr()?;
                    self.expect_sym(":")?;
                    rows.push((v, self.expr()?));
                }
                self.expect_sym("}")?;
                return Ok(DistExpr::Table(rows));
            }
            let mut items = vec![first];
            while self.eat_sym(",") {
                items.push(self.expr()?);
            }
            self.expect_sym("}")?;
            return Ok(DistExpr::UniformSet(items));
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if let Some(m) = self.decls.dists.get(&name).cloned() {
                self.next();
                let mut args = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        args.push(self.expr()?);
                        while self.eat_sym(",") {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_sym(")")?;
                }
                if args.len() != m.params.len() {
                    return Err(ParseError::Arity {
                        name,
                        expected: m.params.len(),
                        got: args.len(),
                    });
                }
                let map: BTreeMap<Var, Expr> =
                    m.params.iter().map(|p| Var::plain(p)).zip(args).collect();
                return Ok(m.body.map_exprs(|e| e.subst(&map)));
            }
        }
        self.err(format!(
            "expected a distribution, found {}",
            describe(self.peek())
        ))
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("forall") || self.is_kw("exists") {
            let q = if self.eat_kw("forall") {
                Quant::Forall
            } else {
                self.next();
                Quant::Exists
            };
            let var = self.ident()?;
            self.expect_kw("in")?;
            self.expect_sym("[")?;
            let lo = self.expr()?;
            self.expect_sym(",")?;
            let hi = self.expr()?;
            self.expect_sym("]")?;
            self.expect_sym(".")?;
            self.bound.push(var.clone());
            let body = self.expr();
            self.bound.pop();
            return Ok(Expr::Quant(
                q,
                var,
                Box::new(lo),
                Box::new(hi),
                Box::new(body?),
            ));
        }
        let lhs = self.cond()?;
        let op = if self.eat_sym("==>") {
            BinOp::Implies
        } else if self.eat_sym("<=>") {
            BinOp::Iff
        } else {
            return Ok(lhs);
        };
        Ok(Expr::bin(op, lhs, self.expr()?))
    }

    fn cond(&mut self) -> Result<Expr, ParseError> {
        let c = self.or()?;
        if self.eat_sym("?") {
            let a = self.cond()?;
            self.expect_sym(":")?;
            let b = self.cond()?;
            return Ok(Expr::Cond(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat_sym("||") || self.eat_kw("or") {
            lhs = Expr::bin(BinOp::Or, lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not()?;
        while self.eat_sym("&&") || self.eat_kw("and") {
            lhs = Expr::bin(BinOp::And, lhs, self.not()?);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("!") || self.eat_kw("not") {
            return Ok(Expr::negate(self.not()?));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.cons()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.next();
        Ok(Expr::bin(op, lhs, self.cons()?))
    }

    fn cons(&mut self) -> Result<Expr, ParseError> {
        let head = self.add()?;
        if self.eat_sym("::") {
            return Ok(Expr::bin(BinOp::Cons, head, self.cons()?));
        }
        Ok(head)
    }

    fn add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.mul()?);
        }
    }

    fn mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_sym("mod") || self.eat_kw("mod") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = match (op, &lhs, &rhs) {
                // Rational literals like 7/10 fold to a single constant.
                (BinOp::Div, Expr::Lit(a), Expr::Lit(b)) => match (a.as_ratio(), b.as_ratio()) {
                    (Some(x), Some(y)) if !y.is_zero() => Expr::Lit(Value::Rat(x / y)),
                    _ => Expr::bin(op, lhs, rhs),
                },
                _ => Expr::bin(op, lhs, rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(match e {
                Expr::Lit(Value::Int(i)) => Expr::Lit(Value::Int(-i)),
                Expr::Lit(Value::Rat(r)) => Expr::Lit(Value::Rat(-r)),
                other => Expr::Unary(UnOp::Neg, Box::new(other)),
            });
        }
        // In operand position, as in `b = !c`, negation binds tightly.
        if self.eat_sym("!") || self.eat_kw("not") {
            return Ok(Expr::negate(self.unary()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.is_sym(".") && matches!(self.peek_at(1), Tok::Int(_)) {
                self.next();
                let Tok::Int(k) = self.next() else {
                    unreachable!()
                };
                let k = usize::try_from(k)
                    .ok()
                    .filter(|k| *k >= 1)
                    .map_or_else(|| self.err("projection index must be >= 1"), Ok)?;
                e = Expr::Proj(Box::new(e), k);
            } else if self.eat_sym("[") {
                let i = self.expr()?;
                self.expect_sym("]")?;
                e = Expr::Index(Box::new(e), Box::new(i));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                Ok(Expr::Lit(Value::Int(i)))
            }
            Tok::Tagged(name, side) => {
                self.next();
                if !self.relational {
                    return self.err(format!(
                        "tagged variable {name}#{} in a program",
                        side.index()
                    ));
                }
                Ok(Expr::tagged(&name, side))
            }
            Tok::Sym("(") => {
                self.next();
                let first = self.expr()?;
                if !self.eat_sym(",") {
                    self.expect_sym(")")?;
                    return Ok(first);
                }
                let mut items = vec![first];
                while !self.is_sym(")") {
                    items.push(self.expr()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
                Ok(fold_literal(items, Value::Tuple, Expr::Tuple))
            }
            Tok::Sym("[") => {
                self.next();
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    items.push(self.expr()?);
                    while self.eat_sym(",") {
                        items.push(self.expr()?);
                    }
                }
                self.expect_sym("]")?;
                Ok(fold_literal(items, Value::List, Expr::List))
            }
            Tok::Ident(name) => {
                if name == "true" || name == "false" {
                    self.next();
                    return Ok(Expr::bool(name == "true"));
                }
                let name = self.ident()?;
                if self.is_sym("(") {
                    self.next();
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        args.push(self.expr()?);
                        while self.eat_sym(",") {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_sym(")")?;
                    let f = functions::lookup(&name)
                        .ok_or_else(|| ParseError::UnknownFunction(name.clone()))?;
                    if f.arity != args.len() {
                        return Err(ParseError::Arity {
                            name,
                            expected: f.arity,
                            got: args.len(),
                        });
                    }
                    return Ok(Expr::Call(name, args));
                }
                if self.bound.contains(&name) {
                    return Ok(Expr::var(&name));
                }
                if self.relational {
                    return Ok(Expr::Lit(Value::Enum(name)));
                }
                if self.decls.vars.contains_key(&name) {
                    Ok(Expr::var(&name))
                } else if self.decls.enum_of(&name).is_some() {
                    Ok(Expr::Lit(Value::Enum(name)))
                } else {
                    Err(ParseError::UnknownIdent(name))
                }
            }
            other => self.err(format!(
                "expected an expression, found {}",
                describe(&other)
            )),
        }
    }
}

fn fold_literal(
    items: Vec<Expr>,
    lit: fn(Vec<Value>) -> Value,
    node: fn(Vec<Expr>) -> Expr,
) -> Expr {
    if items.iter().all(|e| matches!(e, Expr::Lit(_))) {
        lit(items
            .into_iter()
            .map(|e| match e {
                Expr::Lit(v) => v,
                _ => unreachable!(),
            })
            .collect())
        .into()
    } else {
        node(items)
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Expr {
        Expr::Lit(v)
    }
}

/// `b ~~ {0,1}` on a boolean variable samples booleans.
fn coerce_bits(d: DistExpr) -> DistExpr {
    let bit = |e: &Expr| match e {
        Expr::Lit(Value::Int(i)) if *i == BigInt::zero() => Expr::bool(false),
        Expr::Lit(Value::Int(i)) if *i == BigInt::from(1) => Expr::bool(true),
        other => other.clone(),
    };
    match d {
        DistExpr::UniformSet(xs) => DistExpr::UniformSet(xs.iter().map(bit).collect()),
        DistExpr::Table(rows) => {
            DistExpr::Table(rows.iter().map(|(v, w)| (bit(v), w.clone())).collect())
        }
        other => other,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Tagged(s, side) => format!("'{s}#{}'", side.index()),
        Tok::Int(i) => format!("'{i}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// `7/10` as an exact rational, for callers building expressions by hand.
pub fn rat_lit(num: i64, den: i64) -> Expr {
    Expr::Lit(Value::Rat(BigRational::new(num.into(), den.into())))
}
