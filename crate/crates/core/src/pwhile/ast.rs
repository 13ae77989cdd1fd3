use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dist::Value;

use super::domain::Domain;

/// Which program of a relational judgment a variable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl TryFrom<u8> for Side {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Side::Left),
            2 => Ok(Side::Right),
            other => Err(format!("side must be 1 or 2, got {other}")),
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        s.index()
    }
}

/// A variable reference; `side` is set for the tagged variables of
/// relational assertions (`x#1`, `x#2`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub side: Option<Side>,
}

impl Var {
    pub fn plain(name: &str) -> Var {
        Var {
            name: name.to_string(),
            side: None,
        }
    }

    pub fn tagged(name: &str, side: Side) -> Var {
        Var {
            name: name.to_string(),
            side: Some(side),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Some(s) => write!(f, "{}#{}", self.name, s.index()),
            None => write!(f, "{}", self.name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Exact rational division.
    Div,
    /// Euclidean remainder; elementwise on vectors.
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
    /// List cons `x :: xs`.
    Cons,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
            BinOp::Iff => "<=>",
            BinOp::Cons => "::",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quant {
    Forall,
    Exists,
}

/// Expressions of the language. Relational assertions reuse the same
/// type: their program variables are tagged, and bound variables of
/// quantifiers are untagged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(Var),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    /// 1-based tuple projection `e.k`.
    Proj(Box<Expr>, usize),
    /// 1-based indexing `e[i]` into tuples and lists.
    Index(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// Bounded quantifier over an integer interval `[lo, hi]`.
    Quant(Quant, String, Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Var::plain(name))
    }

    pub fn tagged(name: &str, side: Side) -> Expr {
        Expr::Var(Var::tagged(name, side))
    }

    pub fn int(i: i64) -> Expr {
        Expr::Lit(Value::int(i))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Lit(Value::Bool(b))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::And, a, b)
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Implies, a, b)
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Eq, a, b)
    }

    /// Conjunction of all items; `true` when empty.
    pub fn all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Expr::bool(true),
            Some(first) => iter.fold(first, Expr::and),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    /// Top-level conjuncts, flattening nested `&&`.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::Binary(BinOp::And, a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Expr::Lit(Value::Bool(true)) => {}
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Free variables, excluding quantifier-bound names.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                if v.side.is_some() || !bound.iter().any(|b| b == &v.name) {
                    out.insert(v.clone());
                }
            }
            Expr::Quant(_, name, lo, hi, body) => {
                lo.collect_free(bound, out);
                hi.collect_free(bound, out);
                bound.push(name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => self.for_each_child(|c| c.collect_free(bound, out)),
        }
    }

    fn for_each_child<F: FnMut(&Expr)>(&self, mut f: F) {
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Unary(_, a) | Expr::Proj(a, _) => f(a),
            Expr::Binary(_, a, b) | Expr::Index(a, b) => {
                f(a);
                f(b);
            }
            Expr::Cond(a, b, c) | Expr::Quant(_, _, a, b, c) => {
                f(a);
                f(b);
                f(c);
            }
            Expr::Tuple(xs) | Expr::List(xs) | Expr::Call(_, xs) => xs.iter().for_each(f),
        }
    }

    /// Rebuilds the expression bottom-up, giving `f` the chance to replace
    /// each free variable. Bound variables are left untouched.
    pub fn map_vars<F: FnMut(&Var) -> Option<Expr>>(&self, f: &mut F) -> Expr {
        self.map_vars_bound(f, &mut Vec::new())
    }

    fn map_vars_bound<F: FnMut(&Var) -> Option<Expr>>(
        &self,
        f: &mut F,
        bound: &mut Vec<String>,
    ) -> Expr {
        let mut rec = |e: &Expr, bound: &mut Vec<String>| Box::new(e.map_vars_bound(f, bound));
        match self {
            Expr::Lit(_) => self.clone(),
            Expr::Var(v) => {
                if v.side.is_none() && bound.iter().any(|b| b == &v.name) {
                    self.clone()
                } else {
                    f(v).unwrap_or_else(|| self.clone())
                }
            }
            Expr::Unary(op, a) => Expr::Unary(*op, rec(a, bound)),
            Expr::Binary(op, a, b) => {
                let a = rec(a, bound);
                Expr::Binary(*op, a, rec(b, bound))
            }
            Expr::Cond(a, b, c) => {
                let a = rec(a, bound);
                let b = rec(b, bound);
                Expr::Cond(a, b, rec(c, bound))
            }
            Expr::Tuple(xs) => Expr::Tuple(xs.iter().map(|x| *rec(x, bound)).collect()),
            Expr::List(xs) => Expr::List(xs.iter().map(|x| *rec(x, bound)).collect()),
            Expr::Proj(a, k) => Expr::Proj(rec(a, bound), *k),
            Expr::Index(a, b) => {
                let a = rec(a, bound);
                Expr::Index(a, rec(b, bound))
            }
            Expr::Call(name, xs) => {
                Expr::Call(name.clone(), xs.iter().map(|x| *rec(x, bound)).collect())
            }
            Expr::Quant(q, name, lo, hi, body) => {
                let lo = rec(lo, bound);
                let hi = rec(hi, bound);
                bound.push(name.clone());
                let body = rec(body, bound);
                bound.pop();
                Expr::Quant(*q, name.clone(), lo, hi, body)
            }
        }
    }

    /// Simultaneous substitution of free variables.
    pub fn subst(&self, map: &BTreeMap<Var, Expr>) -> Expr {
        self.map_vars(&mut |v| map.get(v).cloned())
    }

    /// Tags every free untagged variable with `side`.
    pub fn tag(&self, side: Side) -> Expr {
        self.map_vars(&mut |v| match v.side {
            None => Some(Expr::Var(Var::tagged(&v.name, side))),
            Some(_) => None,
        })
    }

    /// Strips the `side` tag from every variable; fails if a variable of the
    /// other side occurs.
    pub fn untag(&self, side: Side) -> Result<Expr, String> {
        let mut err = None;
        let out = self.map_vars(&mut |v| match v.side {
            Some(s) if s == side => Some(Expr::var(&v.name)),
            Some(_) => {
                err.get_or_insert_with(|| format!("variable {v} belongs to the other program"));
                None
            }
            None => None,
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Names of the program variables (untagged, free) read by the expression.
    pub fn program_vars(&self) -> BTreeSet<String> {
        self.free_vars()
            .into_iter()
            .filter(|v| v.side.is_none())
            .map(|v| v.name)
            .collect()
    }
}

/// Distribution expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DistExpr {
    Bern(Expr),
    /// Uniform over the listed values (`{0,1}`).
    UniformSet(Vec<Expr>),
    /// Uniform over the integer interval `[lo, hi]`.
    UniformRange(Expr, Expr),
    /// Explicit table of `(value, weight)` entries.
    Table(Vec<(Expr, Expr)>),
}

impl DistExpr {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            DistExpr::Bern(p) => vec![p],
            DistExpr::UniformSet(xs) => xs.iter().collect(),
            DistExpr::UniformRange(lo, hi) => vec![lo, hi],
            DistExpr::Table(rows) => rows.iter().flat_map(|(v, w)| [v, w]).collect(),
        }
    }

    pub fn map_exprs<F: FnMut(&Expr) -> Expr>(&self, mut f: F) -> DistExpr {
        match self {
            DistExpr::Bern(p) => DistExpr::Bern(f(p)),
            DistExpr::UniformSet(xs) => DistExpr::UniformSet(xs.iter().map(f).collect()),
            DistExpr::UniformRange(lo, hi) => DistExpr::UniformRange(f(lo), f(hi)),
            DistExpr::Table(rows) => {
                DistExpr::Table(rows.iter().map(|(v, w)| (f(v), f(w))).collect())
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        self.exprs().into_iter().flat_map(Expr::free_vars).collect()
    }

    pub fn program_vars(&self) -> BTreeSet<String> {
        self.exprs()
            .into_iter()
            .flat_map(Expr::program_vars)
            .collect()
    }

    pub fn tag(&self, side: Side) -> DistExpr {
        self.map_exprs(|e| e.tag(side))
    }

    pub fn untag(&self, side: Side) -> Result<DistExpr, String> {
        let mut err = None;
        let out = self.map_exprs(|e| match e.untag(side) {
            Ok(x) => x,
            Err(m) => {
                err.get_or_insert(m);
                e.clone()
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

/// Commands. Sequences are kept flat: a `Seq` never contains `Skip` or
/// another `Seq`, and has at least two elements (see [`Command::seq`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Skip,
    Assign(String, Expr),
    Rand(String, DistExpr),
    If(Expr, Box<Command>, Box<Command>),
    While(Expr, Box<Command>),
    Seq(Vec<Command>),
}

impl Command {
    /// Normalizing sequence constructor.
    pub fn seq<I: IntoIterator<Item = Command>>(items: I) -> Command {
        let mut flat = Vec::new();
        for c in items {
            match c {
                Command::Skip => {}
                Command::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Command::Skip,
            1 => flat.pop().unwrap(),
            _ => Command::Seq(flat),
        }
    }

    /// The command viewed as a list of statements (`skip` is empty).
    pub fn statements(&self) -> &[Command] {
        match self {
            Command::Skip => &[],
            Command::Seq(items) => items,
            other => std::slice::from_ref(other),
        }
    }

    pub fn from_statements(stmts: &[Command]) -> Command {
        Command::seq(stmts.iter().cloned())
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            Command::Rand(..) => false,
            Command::If(_, a, b) => a.is_deterministic() && b.is_deterministic(),
            Command::While(_, body) => body.is_deterministic(),
            Command::Seq(items) => items.iter().all(Command::is_deterministic),
            Command::Skip | Command::Assign(..) => true,
        }
    }

    /// Every variable mentioned (read or written).
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |c| match c {
            Command::Assign(x, e) => {
                out.insert(x.clone());
                out.extend(e.program_vars());
            }
            Command::Rand(x, d) => {
                out.insert(x.clone());
                out.extend(d.program_vars());
            }
            Command::If(e, ..) | Command::While(e, _) => out.extend(e.program_vars()),
            Command::Skip | Command::Seq(_) => {}
        });
        out
    }

    /// Variables written somewhere in the command.
    pub fn assigned(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |c| {
            if let Command::Assign(x, _) | Command::Rand(x, _) = c {
                out.insert(x.clone());
            }
        });
        out
    }

    /// Variables written on every terminating path.
    pub fn must_assign(&self) -> BTreeSet<String> {
        match self {
            Command::Skip | Command::While(..) => BTreeSet::new(),
            Command::Assign(x, _) | Command::Rand(x, _) => BTreeSet::from([x.clone()]),
            Command::If(_, a, b) => a
                .must_assign()
                .intersection(&b.must_assign())
                .cloned()
                .collect(),
            Command::Seq(items) => items.iter().flat_map(Command::must_assign).collect(),
        }
    }

    /// Variables that may be read before being written.
    pub fn live_in(&self) -> BTreeSet<String> {
        let mut defined = BTreeSet::new();
        let mut live = BTreeSet::new();
        self.live_in_into(&mut defined, &mut live);
        live
    }

    fn live_in_into(&self, defined: &mut BTreeSet<String>, live: &mut BTreeSet<String>) {
        let read =
            |vars: BTreeSet<String>, defined: &BTreeSet<String>, live: &mut BTreeSet<String>| {
                live.extend(vars.into_iter().filter(|v| !defined.contains(v)));
            };
        match self {
            Command::Skip => {}
            Command::Assign(x, e) => {
                read(e.program_vars(), defined, live);
                defined.insert(x.clone());
            }
            Command::Rand(x, d) => {
                read(d.program_vars(), defined, live);
                defined.insert(x.clone());
            }
            Command::If(e, a, b) => {
                read(e.program_vars(), defined, live);
                let mut da = defined.clone();
                a.live_in_into(&mut da, live);
                let mut db = defined.clone();
                b.live_in_into(&mut db, live);
                *defined = da.intersection(&db).cloned().collect();
            }
            Command::While(e, body) => {
                read(e.program_vars(), defined, live);
                let mut inner = defined.clone();
                body.live_in_into(&mut inner, live);
            }
            Command::Seq(items) => items.iter().for_each(|c| c.live_in_into(defined, live)),
        }
    }

    fn visit<F: FnMut(&Command)>(&self, f: &mut F) {
        f(self);
        match self {
            Command::If(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Command::While(_, body) => body.visit(f),
            Command::Seq(items) => items.iter().for_each(|c| c.visit(f)),
            _ => {}
        }
    }
}

/// Types of program variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Rat,
    Enum(String),
    Tuple(Vec<Type>),
    /// Homogeneous tuple of any length (`vec<int>`).
    Vec(Box<Type>),
    List(Box<Type>),
    /// Element type of the empty list literal; joins with anything.
    Any,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Rat => write!(f, "rat"),
            Type::Enum(n) => write!(f, "{n}"),
            Type::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Type::Vec(t) => write!(f, "vec<{t}>"),
            Type::List(t) => write!(f, "list<{t}>"),
            Type::Any => write!(f, "_"),
        }
    }
}

/// A named, parameterized distribution (`dist bd(s) = {...};`), inlined at
/// use sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistMacro {
    pub params: Vec<String>,
    pub body: DistExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decls {
    pub vars: BTreeMap<String, Type>,
    pub enums: BTreeMap<String, Vec<String>>,
    pub dists: BTreeMap<String, DistMacro>,
    /// Domains declared inline with `in [lo, hi]`.
    pub domains: BTreeMap<String, Domain>,
}

impl Decls {
    /// The enum declaring `variant`, if any.
    pub fn enum_of(&self, variant: &str) -> Option<&str> {
        self.enums
            .iter()
            .find(|(_, vs)| vs.iter().any(|v| v == variant))
            .map(|(n, _)| n.as_str())
    }
}

/// A parsed program: declarations, body and optional `return` expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub decls: Decls,
    pub body: Command,
    pub ret: Option<Expr>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_normalizes() {
        let a = Command::Assign("x".into(), Expr::int(1));
        let s = Command::seq([
            Command::Skip,
            Command::seq([a.clone(), a.clone()]),
            Command::Skip,
        ]);
        assert_eq!(s.statements().len(), 2);
        assert_eq!(Command::seq([Command::Skip]), Command::Skip);
        assert_eq!(Command::seq([a.clone()]), a);
    }

    #[test]
    fn substitution_respects_binders() {
        // forall i in [1, 2]. i = x#1  with x#1 := i#1
        let body = Expr::eq(Expr::var("i"), Expr::tagged("x", Side::Left));
        let q = Expr::Quant(
            Quant::Forall,
            "i".into(),
            Box::new(Expr::int(1)),
            Box::new(Expr::int(2)),
            Box::new(body),
        );
        let map = BTreeMap::from([(Var::tagged("x", Side::Left), Expr::tagged("i", Side::Left))]);
        let out = q.subst(&map);
        let fv = out.free_vars();
        assert!(fv.contains(&Var::tagged("i", Side::Left)));
        assert!(!fv.contains(&Var::plain("i")));
    }

    #[test]
    fn live_in_and_must_assign() {
        // x := y; if b then z := 1 else z := x fi; while z < n do w := w + 1 end
        let c = Command::seq([
            Command::Assign("x".into(), Expr::var("y")),
            Command::If(
                Expr::var("b"),
                Box::new(Command::Assign("z".into(), Expr::int(1))),
                Box::new(Command::Assign("z".into(), Expr::var("x"))),
            ),
            Command::While(
                Expr::bin(BinOp::Lt, Expr::var("z"), Expr::var("n")),
                Box::new(Command::Assign(
                    "w".into(),
                    Expr::bin(BinOp::Add, Expr::var("w"), Expr::int(1)),
                )),
            ),
        ]);
        let live: Vec<_> = c.live_in().into_iter().collect();
        assert_eq!(live, ["b", "n", "w", "y"]);
        let must: Vec<_> = c.must_assign().into_iter().collect();
        assert_eq!(must, ["x", "z"]);
    }
}
