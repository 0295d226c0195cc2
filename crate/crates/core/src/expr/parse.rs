//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := base ('^' unary)?
//! base  := number | ident | ident '(' args ')' | 'p(' int ',' int ',' int ')'
//!        | 'v(' int ')' | 'lap(' expr ')' | '(' expr ')'
//! ```

use thiserror::Error;

use super::{reserved_constant, Expr, FunctionRegistry, ParamRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` at offset {offset} takes {expected} arguments, got {found}")]
    Arity { name: String, offset: usize, expected: String, found: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

/// Parses against the default function registry.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_expr_with(text, &FunctionRegistry::default())
}

pub fn parse_expr_with(text: &str, registry: &FunctionRegistry) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, end: text.len(), registry };
    let e = parser.expr()?;
    match parser.peek() {
        None => Ok(e),
        Some(tok) => Err(syntax(tok.offset, format!("unexpected {}", tok.kind.describe()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(x) => format!("number {x}"),
            Kind::Ident(s) => format!("identifier `{s}`"),
            Kind::Op(c) => format!("`{c}`"),
            Kind::LParen => "`(`".into(),
            Kind::RParen => "`)`".into(),
            Kind::Comma => "`,`".into(),
        }
    }

    fn starts_operand(&self) -> bool {
        matches!(self, Kind::Num(_) | Kind::Ident(_) | Kind::LParen | Kind::Op('-'))
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { offset, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                i += 1;
                Kind::Op(c as char)
            }
            b'(' => {
                i += 1;
                Kind::LParen
            }
            b')' => {
                i += 1;
                Kind::RParen
            }
            b',' => {
                i += 1;
                Kind::Comma
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lexeme = &text[start..i];
                let value: f64 =
                    lexeme.parse().map_err(|_| syntax(start, format!("malformed number `{lexeme}`")))?;
                Kind::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Kind::Ident(text[start..i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        tokens.push(Token { kind, offset: start });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    registry: &'a FunctionRegistry,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn peek_op(&self, ops: &[char]) -> Option<(char, usize)> {
        match self.peek() {
            Some(Token { kind: Kind::Op(c), offset, .. }) if ops.contains(c) => Some((*c, *offset)),
            _ => None,
        }
    }

    /// The operand after a binary operator; reports the operator itself
    /// when nothing that can start an operand follows it.
    fn require_operand(&self, op: char, op_offset: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(tok) if tok.kind.starts_operand() => Ok(()),
            _ => Err(syntax(op_offset, format!("operator `{op}` is missing its right operand"))),
        }
    }

    fn expect(&mut self, want: Kind, what: &str) -> Result<Token, ParseError> {
        match self.next() {
            Some(tok) if tok.kind == want => Ok(tok),
            Some(tok) => Err(syntax(tok.offset, format!("expected {what}, found {}", tok.kind.describe()))),
            None => Err(syntax(self.end, format!("expected {what}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some((op, offset)) = self.peek_op(&['+', '-']) {
            self.pos += 1;
            self.require_operand(op, offset)?;
            let rhs = self.term()?;
            lhs = if op == '+' { Expr::add(lhs, rhs) } else { Expr::sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((op, offset)) = self.peek_op(&['*', '/']) {
            self.pos += 1;
            self.require_operand(op, offset)?;
            let rhs = self.unary()?;
            lhs = if op == '*' { Expr::mul(lhs, rhs) } else { Expr::div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((_, offset)) = self.peek_op(&['-']) {
            self.pos += 1;
            self.require_operand('-', offset)?;
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if let Some((_, offset)) = self.peek_op(&['^']) {
            self.pos += 1;
            self.require_operand('^', offset)?;
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let tok = match self.next() {
            Some(tok) => tok,
            None => return Err(syntax(self.end, "expected an operand, found end of input")),
        };
        match tok.kind {
            Kind::Num(x) => Ok(Expr::real(x)),
            Kind::LParen => {
                let inner = self.expr()?;
                self.expect(Kind::RParen, "`)`")?;
                Ok(inner)
            }
            Kind::Ident(name) => {
                let is_call = matches!(self.peek(), Some(Token { kind: Kind::LParen, .. }));
                if !is_call {
                    return Ok(match reserved_constant(&name) {
                        Some(c) => Expr::Const(c),
                        None => Expr::Sym(name),
                    });
                }
                self.pos += 1;
                match name.as_str() {
                    "p" => {
                        let row = self.index()?;
                        self.expect(Kind::Comma, "`,`")?;
                        let col = self.index()?;
                        self.expect(Kind::Comma, "`,`")?;
                        let k = self.index()?;
                        self.expect(Kind::RParen, "`)`")?;
                        Ok(Expr::Param(ParamRef::new(row, col, k)))
                    }
                    "v" => {
                        let col = self.index()?;
                        self.expect(Kind::RParen, "`)`")?;
                        Ok(Expr::Var(col))
                    }
                    "lap" => {
                        let inner = self.expr()?;
                        self.expect(Kind::RParen, "`)`")?;
                        Ok(Expr::laplacian(inner))
                    }
                    _ => self.call(name, tok.offset),
                }
            }
            other => Err(syntax(tok.offset, format!("expected an operand, found {}", other.describe()))),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        let Some((min, max)) = self.registry.arity(&name) else {
            return Err(ParseError::UnknownFunction { name, offset });
        };
        let mut args = Vec::new();
        if matches!(self.peek(), Some(Token { kind: Kind::RParen, .. })) {
            self.pos += 1;
        } else {
            loop {
                args.push(self.expr()?);
                match self.next() {
                    Some(Token { kind: Kind::Comma, .. }) => continue,
                    Some(Token { kind: Kind::RParen, .. }) => break,
                    Some(tok) => {
                        return Err(syntax(
                            tok.offset,
                            format!("expected `,` or `)`, found {}", tok.kind.describe()),
                        ))
                    }
                    None => return Err(syntax(self.end, "expected `)`, found end of input")),
                }
            }
        }
        if args.len() < min || args.len() > max {
            let expected = match (min, max) {
                (a, b) if a == b => a.to_string(),
                (a, usize::MAX) => format!("at least {a}"),
                (a, b) => format!("{a} to {b}"),
            };
            return Err(ParseError::Arity { name, offset, expected, found: args.len() });
        }
        Ok(Expr::Call(name, args))
    }

    fn index(&mut self) -> Result<usize, ParseError> {
        match self.next() {
            Some(Token { kind: Kind::Num(x), .. }) if x.fract() == 0.0 && (1.0..1e15).contains(&x) => {
                Ok(x as usize)
            }
            Some(tok) => Err(syntax(tok.offset, "expected a positive integer index")),
            None => Err(syntax(self.end, "expected a positive integer index, found end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;
    use num_complex::Complex64;

    #[test]
    fn call_with_free_symbol() {
        assert_eq!(parse_expr("sin(x)").unwrap(), Expr::call("sin", vec![Expr::sym("x")]));
    }

    #[test]
    fn bucky_row_one_shape() {
        let e = parse_expr("-p(1,1,1)*v(1)*(v(3)+v(4)+v(5))").unwrap();
        let sum = Expr::add(Expr::add(Expr::var(3), Expr::var(4)), Expr::var(5));
        let expected = Expr::mul(Expr::mul(Expr::neg(Expr::param(1, 1, 1)), Expr::var(1)), sum);
        assert_eq!(e, expected);
    }

    #[test]
    fn dangling_operator_reports_its_offset() {
        let err = parse_expr("1 +* 2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 2, .. }), "{err:?}");
        assert_eq!(parse_expr("x*").unwrap_err().offset(), 1);
    }

    #[test]
    fn unknown_function() {
        let err = parse_expr("1 + foo(x)").unwrap_err();
        assert_eq!(err, ParseError::UnknownFunction { name: "foo".into(), offset: 4 });
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds looser than ^
        assert_eq!(parse_expr("-x^2").unwrap(), Expr::neg(Expr::pow(Expr::sym("x"), Expr::real(2.0))));
        // ^ is right associative
        let e = parse_expr("a^b^c").unwrap();
        assert_eq!(e, Expr::pow(Expr::sym("a"), Expr::pow(Expr::sym("b"), Expr::sym("c"))));
        // - and / are left associative
        let e = parse_expr("a-b-c").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Sub, ref l, _) if matches!(**l, Expr::Binary(BinOp::Sub, ..))));
        let e = parse_expr("2^-x").unwrap();
        assert_eq!(e, Expr::pow(Expr::real(2.0), Expr::neg(Expr::sym("x"))));
    }

    #[test]
    fn reserved_constants_and_numbers() {
        assert_eq!(parse_expr("i").unwrap(), Expr::Const(Complex64::new(0.0, 1.0)));
        assert_eq!(parse_expr("pi").unwrap(), Expr::real(std::f64::consts::PI));
        assert_eq!(parse_expr("1.5e-3").unwrap(), Expr::real(1.5e-3));
        assert_eq!(parse_expr(".25").unwrap(), Expr::real(0.25));
        assert!(parse_expr("2e").is_err());
    }

    #[test]
    fn references_and_laplacian() {
        assert_eq!(parse_expr("v(12)").unwrap(), Expr::var(12));
        assert_eq!(parse_expr("lap(A_E)").unwrap(), Expr::laplacian(Expr::sym("A_E")));
        assert!(parse_expr("v(0)").is_err());
        assert!(parse_expr("p(1,2)").is_err());
        assert!(parse_expr("p(1,2,1.5)").is_err());
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(parse_expr("sin(x, y)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_expr("B(x)"), Err(ParseError::Arity { .. })));
        assert!(parse_expr("H(x, 2, 0.5, 4)").is_ok());
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(parse_expr("(x))"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("x y"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr(""), Err(ParseError::Syntax { offset: 0, .. })));
    }
}
