//! Content-MathML subset: `apply`, `plus`, `minus`, `times`, `divide`,
//! `power`, `ci`, `cn`, `sin`, `cos`, `tan`, `exp`, `ln`, `root` (with an
//! optional `degree`), `abs` and `csymbol` for registered named forms.
//!
//! `<ci>` content follows the infix naming convention: `v(3)` is a column
//! variable, `p(1,2,1)` a parameter reference, `i`/`pi`/`e` constants and
//! anything else a free symbol.

use std::fmt::Write;

use num_complex::Complex64;
use roxmltree::{Document, Node};
use thiserror::Error;

use super::eval::default_registry;
use super::{parse_expr, BinOp, Builtin, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathmlError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unsupported MathML element <{0}>")]
    UnsupportedElement(String),
    #[error("malformed MathML: {0}")]
    Malformed(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{0} has no Content-MathML form in the supported subset")]
    UnsupportedNode(&'static str),
}

fn malformed(msg: impl Into<String>) -> MathmlError {
    MathmlError::Malformed(msg.into())
}

pub fn parse_mathml(document: &str) -> Result<Expr, MathmlError> {
    let doc = Document::parse(document).map_err(|e| MathmlError::Xml(e.to_string()))?;
    let mut root = doc.root_element();
    if root.tag_name().name() == "math" {
        let children: Vec<Node> = root.children().filter(Node::is_element).collect();
        root = match children.as_slice() {
            [only] => *only,
            _ => return Err(malformed("<math> must contain exactly one expression")),
        };
    }
    convert(root)
}

fn text_of(node: Node) -> String {
    node.children().filter_map(|c| c.text()).collect::<String>().trim().to_string()
}

fn convert(node: Node) -> Result<Expr, MathmlError> {
    let tag = node.tag_name().name();
    match tag {
        "cn" => {
            let text = text_of(node);
            let x: f64 = text
                .parse()
                .map_err(|_| malformed(format!("<cn> content `{text}` is not a number")))?;
            // same tree the infix parser builds for a signed literal
            Ok(if x.is_sign_negative() { Expr::neg(Expr::real(-x)) } else { Expr::real(x) })
        }
        "ci" => {
            let name = text_of(node);
            match parse_expr(&name) {
                Ok(e @ (Expr::Sym(_) | Expr::Var(_) | Expr::Param(_) | Expr::Const(_))) => Ok(e),
                _ => Err(malformed(format!("<ci> content `{name}` is not an identifier or reference"))),
            }
        }
        "apply" => convert_apply(node),
        other => Err(MathmlError::UnsupportedElement(other.to_string())),
    }
}

fn convert_apply(node: Node) -> Result<Expr, MathmlError> {
    let mut children = node.children().filter(Node::is_element);
    let head = children.next().ok_or_else(|| malformed("empty <apply>"))?;
    let mut degree = None;
    let mut args = Vec::new();
    for child in children {
        if child.tag_name().name() == "degree" {
            let inner: Vec<Node> = child.children().filter(Node::is_element).collect();
            match inner.as_slice() {
                [only] => degree = Some(convert(*only)?),
                _ => return Err(malformed("<degree> must contain one expression")),
            }
        } else {
            args.push(convert(child)?);
        }
    }
    let op = head.tag_name().name();
    let expect = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(malformed(format!("<{op}> takes {n} argument(s), got {}", args.len())))
        }
    };
    if degree.is_some() && op != "root" {
        return Err(malformed("<degree> is only allowed with <root>"));
    }
    let fold = |op: BinOp, args: Vec<Expr>| {
        let mut it = args.into_iter();
        let first = it.next().ok_or_else(|| malformed("n-ary operator without arguments"))?;
        Ok(it.fold(first, |acc, x| Expr::binary(op, acc, x)))
    };
    match op {
        "plus" => fold(BinOp::Add, args),
        "times" => fold(BinOp::Mul, args),
        "minus" => match args.len() {
            1 => Ok(Expr::neg(args.pop_only())),
            2 => fold(BinOp::Sub, args),
            n => Err(malformed(format!("<minus> takes 1 or 2 arguments, got {n}"))),
        },
        "divide" => {
            expect(2)?;
            fold(BinOp::Div, args)
        }
        "power" => {
            expect(2)?;
            fold(BinOp::Pow, args)
        }
        "sin" | "cos" | "tan" | "exp" | "ln" | "abs" => {
            expect(1)?;
            Ok(Expr::call(op, args))
        }
        "root" => {
            expect(1)?;
            Ok(match degree {
                None => Expr::call("sqrt", args),
                Some(d) => Expr::pow(args.pop_only(), Expr::div(Expr::real(1.0), d)),
            })
        }
        "csymbol" => {
            let name = head
                .attribute("definitionURL")
                .map(str::to_string)
                .unwrap_or_else(|| text_of(head));
            let registry = default_registry();
            let (min, max) = registry.arity(&name).ok_or_else(|| MathmlError::UnknownFunction(name.clone()))?;
            if args.len() < min || args.len() > max {
                return Err(malformed(format!("`{name}` called with {} arguments", args.len())));
            }
            Ok(Expr::Call(name, args))
        }
        other => Err(MathmlError::UnsupportedElement(other.to_string())),
    }
}

trait PopOnly {
    fn pop_only(self) -> Expr;
}

impl PopOnly for Vec<Expr> {
    fn pop_only(mut self) -> Expr {
        self.pop().expect("arity checked")
    }
}

/// Emits the bare content element (no `<math>` wrapper).
pub fn emit_mathml(e: &Expr) -> Result<String, MathmlError> {
    let mut out = String::new();
    emit(e, &mut out)?;
    Ok(out)
}

fn emit_const(c: Complex64, out: &mut String) {
    if c.im == 0.0 {
        let _ = write!(out, "<cn>{}</cn>", c.re);
    } else {
        let _ = write!(
            out,
            "<apply><plus/><cn>{}</cn><apply><times/><cn>{}</cn><ci>i</ci></apply></apply>",
            c.re, c.im
        );
    }
}

fn apply(head: &str, args: &[&Expr], out: &mut String) -> Result<(), MathmlError> {
    out.push_str("<apply>");
    out.push_str(head);
    for a in args {
        emit(a, out)?;
    }
    out.push_str("</apply>");
    Ok(())
}

fn emit(e: &Expr, out: &mut String) -> Result<(), MathmlError> {
    match e {
        Expr::Const(c) => emit_const(*c, out),
        Expr::Var(c) => {
            let _ = write!(out, "<ci>v({c})</ci>");
        }
        Expr::Param(p) => {
            let _ = write!(out, "<ci>{p}</ci>");
        }
        Expr::Sym(s) => {
            let _ = write!(out, "<ci>{s}</ci>");
        }
        Expr::Neg(inner) => apply("<minus/>", &[inner], out)?,
        Expr::Binary(op, a, b) => {
            let head = match op {
                BinOp::Add => "<plus/>",
                BinOp::Sub => "<minus/>",
                BinOp::Mul => "<times/>",
                BinOp::Div => "<divide/>",
                BinOp::Pow => "<power/>",
            };
            apply(head, &[a, b], out)?;
        }
        Expr::Call(name, args) => {
            let args: Vec<&Expr> = args.iter().collect();
            let head = match Builtin::from_name(name) {
                Some(Builtin::Sqrt) => "<root/>".to_string(),
                Some(Builtin::Min | Builtin::Max) | None => {
                    format!("<csymbol definitionURL=\"{name}\">{name}</csymbol>")
                }
                Some(b) => format!("<{}/>", b.name()),
            };
            apply(&head, &args, out)?;
        }
        Expr::Laplacian(_) => return Err(MathmlError::UnsupportedNode("laplacian")),
    }
    Ok(())
}
