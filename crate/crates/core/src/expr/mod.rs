//! Expression trees for rule functional forms.
//!
//! An [`Expr`] is an immutable tree over complex constants, column
//! variables (`v(c)`), MRM parameter references (`p(r,c,k)`), free
//! symbols and calls into a [`FunctionRegistry`]. Trees come from the
//! infix grammar ([`parse_expr`]) or a Content-MathML subset
//! ([`parse_mathml`]), are evaluated over complex numbers ([`eval`]) and
//! compared numerically by random sampling ([`equivalent`]).

mod equiv;
pub(crate) mod eval;
mod functions;
mod mathml;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use equiv::{equivalent, Domain, EquivError, EquivalenceVerdict, Outcome, Witness};
pub use eval::{eval, Env, EvalError};
pub use functions::{Builtin, FunctionDef, FunctionRegistry, RegistryError};
pub use mathml::{emit_mathml, parse_mathml, MathmlError};
pub use parse::{parse_expr, parse_expr_with, ParseError};

/// Reference to the `k`-th parameter of MRM cell `(row, col)`. All indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParamRef {
    pub row: usize,
    pub col: usize,
    pub k: usize,
}

impl ParamRef {
    pub fn new(row: usize, col: usize, k: usize) -> Self {
        ParamRef { row, col, k }
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p({},{},{})", self.row, self.col, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// Column variable, 1-based.
    Var(usize),
    Param(ParamRef),
    Sym(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// Spatial Laplacian of the inner expression. Carried symbolically only.
    Laplacian(Box<Expr>),
}

/// A leaf that must be bound before evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leaf {
    Sym(String),
    Var(usize),
    Param(ParamRef),
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::Sym(s) => f.write_str(s),
            Leaf::Var(c) => write!(f, "v({c})"),
            Leaf::Param(p) => p.fmt(f),
        }
    }
}

impl Expr {
    pub fn real(x: f64) -> Expr {
        Expr::Const(Complex64::new(x, 0.0))
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn var(col: usize) -> Expr {
        Expr::Var(col)
    }

    pub fn param(row: usize, col: usize, k: usize) -> Expr {
        Expr::Param(ParamRef::new(row, col, k))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call(name.into(), args)
    }

    pub fn laplacian(e: Expr) -> Expr {
        Expr::Laplacian(Box::new(e))
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Neg(inner) | Expr::Laplacian(inner) => inner.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) | Expr::Sym(_) => {}
        }
    }

    /// Rebuilds the tree bottom-up, letting `f` replace any node after its
    /// children have been rebuilt.
    pub fn map(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.map(f))),
            Expr::Laplacian(inner) => Expr::Laplacian(Box::new(inner.map(f))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.map(f)), Box::new(b.map(f))),
            Expr::Call(name, args) => Expr::Call(name.clone(), args.iter().map(|a| a.map(f)).collect()),
            leaf => leaf.clone(),
        };
        f(rebuilt)
    }

    /// Leaf references in order of first appearance, left to right.
    pub fn free_symbols(&self) -> Vec<Leaf> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.walk(&mut |node| {
            let leaf = match node {
                Expr::Sym(s) => Leaf::Sym(s.clone()),
                Expr::Var(c) => Leaf::Var(*c),
                Expr::Param(p) => Leaf::Param(*p),
                _ => return,
            };
            if seen.insert(leaf.clone()) {
                out.push(leaf);
            }
        });
        out
    }

    pub fn contains_laplacian(&self) -> bool {
        let mut found = false;
        self.walk(&mut |node| found |= matches!(node, Expr::Laplacian(_)));
        found
    }

    pub fn calls(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |node| found |= matches!(node, Expr::Call(n, _) if n == name));
        found
    }

    /// Splits a top-level chain of `+`/`-` into signed summands. A negated
    /// product carries its sign on the leftmost factor, as `-k*x` parses.
    pub fn summands(&self) -> Vec<Expr> {
        fn negated(e: &Expr) -> Expr {
            match e {
                Expr::Binary(op @ (BinOp::Mul | BinOp::Div), a, b) => Expr::Binary(*op, Box::new(negated(a)), b.clone()),
                Expr::Neg(inner) => (**inner).clone(),
                other => Expr::neg(other.clone()),
            }
        }
        fn go(e: &Expr, negate: bool, out: &mut Vec<Expr>) {
            match e {
                Expr::Binary(BinOp::Add, a, b) => {
                    go(a, negate, out);
                    go(b, negate, out);
                }
                Expr::Binary(BinOp::Sub, a, b) => {
                    go(a, negate, out);
                    go(b, !negate, out);
                }
                other if negate => out.push(negated(other)),
                other => out.push(other.clone()),
            }
        }
        let mut out = Vec::new();
        go(self, false, &mut out);
        out
    }

    /// Substitutes named symbols.
    pub fn substitute(&self, lookup: &impl Fn(&str) -> Option<Expr>) -> Expr {
        self.map(&mut |node| match &node {
            Expr::Sym(s) => lookup(s).unwrap_or(node),
            _ => node,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_expr(&text).map_err(serde::de::Error::custom)
    }
}

/// Transliterated identifiers such as `beta` are ordinary symbols; these
/// names are reserved by the grammar.
pub(crate) fn reserved_constant(name: &str) -> Option<Complex64> {
    match name {
        "i" => Some(Complex64::new(0.0, 1.0)),
        "pi" => Some(Complex64::new(std::f64::consts::PI, 0.0)),
        "e" => Some(Complex64::new(std::f64::consts::E, 0.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_symbols_of_constant_is_empty() {
        assert!(Expr::real(3.0).free_symbols().is_empty());
    }

    #[test]
    fn free_symbols_first_appearance_order() {
        let e = parse_expr("sin(x)+y").unwrap();
        assert_eq!(e.free_symbols(), vec![Leaf::Sym("x".into()), Leaf::Sym("y".into())]);
        let e = parse_expr("y*x+x*y").unwrap();
        assert_eq!(e.free_symbols(), vec![Leaf::Sym("y".into()), Leaf::Sym("x".into())]);
    }

    #[test]
    fn free_symbols_of_bucky_row_one() {
        let e = parse_expr("-p(1,1,1)*v(1)*(v(3)+v(4)+v(5))").unwrap();
        assert_eq!(
            e.free_symbols(),
            vec![
                Leaf::Param(ParamRef::new(1, 1, 1)),
                Leaf::Var(1),
                Leaf::Var(3),
                Leaf::Var(4),
                Leaf::Var(5),
            ]
        );
    }

    #[test]
    fn summands_split_signed_chain() {
        let e = parse_expr("a - b + c*d - (e1 - f)").unwrap();
        let parts: Vec<String> = e.summands().iter().map(|t| t.to_string()).collect();
        assert_eq!(parts, vec!["a", "-b", "c*d", "-e1", "f"]);
        let parts: Vec<String> = parse_expr("x - k*y/z - -w").unwrap().summands().iter().map(|t| t.to_string()).collect();
        assert_eq!(parts, vec!["x", "-k*y/z", "w"]);
    }

    #[test]
    fn serde_uses_infix_text() {
        let e = parse_expr("H(x)-k1*x").unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"H(x)-k1*x\"");
        let back: Expr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
