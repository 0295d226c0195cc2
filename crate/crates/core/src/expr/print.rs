//! Minimal-parenthesis printer whose output re-parses to the same tree.

use std::fmt;

use num_complex::Complex64;

use super::{BinOp, Expr};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    f.write_str(&render(e).0)
}

fn paren(s: (String, u8), needed: bool) -> String {
    if needed {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn render(e: &Expr) -> (String, u8) {
    match e {
        Expr::Const(c) => render_const(*c),
        Expr::Var(c) => (format!("v({c})"), ATOM),
        Expr::Param(p) => (p.to_string(), ATOM),
        Expr::Sym(s) => (s.clone(), ATOM),
        Expr::Neg(inner) => render_neg(render(inner)),
        Expr::Binary(op, a, b) => render_binary(*op, render(a), render(b)),
        Expr::Call(name, args) => {
            let args: Vec<String> = args.iter().map(|a| render(a).0).collect();
            (format!("{name}({})", args.join(",")), ATOM)
        }
        Expr::Laplacian(inner) => (format!("lap({})", render(inner).0), ATOM),
    }
}

fn render_neg(inner: (String, u8)) -> (String, u8) {
    let needs = inner.1 < NEG;
    (format!("-{}", paren(inner, needs)), NEG)
}

fn render_binary(op: BinOp, a: (String, u8), b: (String, u8)) -> (String, u8) {
    let (prec, left_paren, right_paren) = match op {
        BinOp::Add | BinOp::Sub => (ADD, a.1 < ADD, b.1 <= ADD),
        BinOp::Mul | BinOp::Div => (MUL, a.1 < MUL, b.1 <= MUL),
        BinOp::Pow => (POW, a.1 <= POW, b.1 < NEG),
    };
    (format!("{}{}{}", paren(a, left_paren), op.symbol(), paren(b, right_paren)), prec)
}

fn render_magnitude(x: f64) -> (String, u8) {
    let text = if x == std::f64::consts::PI {
        "pi".to_string()
    } else if x == std::f64::consts::E {
        "e".to_string()
    } else {
        format!("{x}")
    };
    (text, ATOM)
}

fn render_real(x: f64) -> (String, u8) {
    if x.is_sign_negative() && !x.is_nan() {
        render_neg(render_magnitude(-x))
    } else {
        render_magnitude(x)
    }
}

/// Constants print as the tree the parser would build from the same
/// text: negatives as negation, imaginary parts as multiples of `i`.
fn render_const(c: Complex64) -> (String, u8) {
    if c.im == 0.0 {
        return render_real(c.re);
    }
    let unit = ("i".to_string(), ATOM);
    let magnitude = c.im.abs();
    let imag = if magnitude == 1.0 {
        unit
    } else {
        render_binary(BinOp::Mul, render_magnitude(magnitude), unit)
    };
    if c.re == 0.0 && !c.re.is_sign_negative() {
        return match (c.im < 0.0, magnitude == 1.0) {
            (false, _) => imag,
            (true, true) => render_neg(imag),
            (true, false) => render_binary(BinOp::Mul, render_real(c.im), ("i".to_string(), ATOM)),
        };
    }
    let op = if c.im < 0.0 { BinOp::Sub } else { BinOp::Add };
    render_binary(op, render_real(c.re), imag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn show(e: &Expr) -> String {
        e.to_string()
    }

    #[test]
    fn prints_minimal_parentheses() {
        for text in [
            "-p(1,1,1)*v(1)*(v(3)+v(4)+v(5))",
            "(1-p(3,2,1))*p(3,2,2)*v(2)-p(3,3,1)*v(3)",
            "a-(b-c)",
            "a/(b*c)",
            "(-a)^2",
            "-a^2",
            "a^b^c",
            "(a^b)^c",
            "2^-x",
            "a--b",
            "H(x,2,0.5,4)+lap(A_E)",
            "(exp(i*x)-exp(-i*x))/(2*i)",
        ] {
            assert_eq!(show(&parse_expr(text).unwrap()), text);
        }
    }

    #[test]
    fn constants_print_as_parseable_trees() {
        let cases = [
            (Complex64::new(-3.0, 0.0), "-3"),
            (Complex64::new(0.0, 1.0), "i"),
            (Complex64::new(0.0, -2.5), "-2.5*i"),
            (Complex64::new(1.0, 2.0), "1+2*i"),
            (Complex64::new(1.0, -1.0), "1-i"),
            (Complex64::new(std::f64::consts::PI, 0.0), "pi"),
        ];
        for (c, text) in cases {
            assert_eq!(show(&Expr::Const(c)), text);
        }
        let e = Expr::mul(Expr::sym("x"), Expr::Const(Complex64::new(1.0, 2.0)));
        assert_eq!(show(&e), "x*(1+2*i)");
        let e = Expr::pow(Expr::real(-2.0), Expr::sym("x"));
        assert_eq!(show(&e), "(-2)^x");
    }
}
