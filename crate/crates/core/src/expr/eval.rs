use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use super::{BinOp, Builtin, Expr, FunctionRegistry, Leaf, ParamRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(Leaf),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("laplacian terms cannot be evaluated pointwise")]
    Laplacian,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

impl EvalError {
    /// Singular points that random sampling may step around.
    pub fn is_singular(&self) -> bool {
        matches!(self, EvalError::DivisionByZero | EvalError::Domain(_))
    }
}

pub(crate) fn default_registry() -> &'static FunctionRegistry {
    static REGISTRY: OnceLock<FunctionRegistry> = OnceLock::new();
    REGISTRY.get_or_init(FunctionRegistry::default)
}

/// Bindings for every kind of leaf.
#[derive(Debug, Clone)]
pub struct Env<'r> {
    pub symbols: HashMap<String, Complex64>,
    pub params: HashMap<ParamRef, f64>,
    pub vars: HashMap<usize, f64>,
    registry: &'r FunctionRegistry,
}

impl Default for Env<'static> {
    fn default() -> Self {
        Env::with_registry(default_registry())
    }
}

impl Env<'static> {
    pub fn new() -> Self {
        Env::default()
    }
}

impl<'r> Env<'r> {
    pub fn with_registry(registry: &'r FunctionRegistry) -> Self {
        Env { symbols: HashMap::new(), params: HashMap::new(), vars: HashMap::new(), registry }
    }

    pub fn symbol(mut self, name: impl Into<String>, value: impl Into<Complex64>) -> Self {
        self.symbols.insert(name.into(), value.into());
        self
    }

    pub fn param(mut self, at: ParamRef, value: f64) -> Self {
        self.params.insert(at, value);
        self
    }

    pub fn var(mut self, col: usize, value: f64) -> Self {
        self.vars.insert(col, value);
        self
    }

    /// Binds a leaf of any kind; symbols and references take the real value.
    pub fn bind_leaf(&mut self, leaf: &Leaf, value: f64) {
        match leaf {
            Leaf::Sym(s) => {
                self.symbols.insert(s.clone(), Complex64::new(value, 0.0));
            }
            Leaf::Var(c) => {
                self.vars.insert(*c, value);
            }
            Leaf::Param(p) => {
                self.params.insert(*p, value);
            }
        }
    }

    pub fn registry(&self) -> &'r FunctionRegistry {
        self.registry
    }
}

pub fn eval(e: &Expr, env: &Env<'_>) -> Result<Complex64, EvalError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Sym(s) => {
            env.symbols.get(s).copied().ok_or_else(|| EvalError::UnboundSymbol(Leaf::Sym(s.clone())))
        }
        Expr::Var(c) => env
            .vars
            .get(c)
            .map(|&x| Complex64::new(x, 0.0))
            .ok_or(EvalError::UnboundSymbol(Leaf::Var(*c))),
        Expr::Param(p) => env
            .params
            .get(p)
            .map(|&x| Complex64::new(x, 0.0))
            .ok_or(EvalError::UnboundSymbol(Leaf::Param(*p))),
        Expr::Neg(inner) => Ok(-eval(inner, env)?),
        Expr::Binary(op, a, b) => binary(*op, eval(a, env)?, eval(b, env)?),
        Expr::Call(name, args) => {
            let values = args.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>, _>>()?;
            if let Some(builtin) = Builtin::from_name(name) {
                return apply_builtin(builtin, &values);
            }
            let def = env.registry.get(name).ok_or_else(|| EvalError::UnknownFunction(name.clone()))?;
            let mut inner = Env::with_registry(env.registry);
            for (i, (formal, default)) in def.formals.iter().enumerate() {
                let value = match values.get(i) {
                    Some(v) => *v,
                    None => match default {
                        Some(d) => Complex64::new(*d, 0.0),
                        None => return Err(EvalError::Domain(format!("missing argument to `{name}`"))),
                    },
                };
                inner.symbols.insert(formal.clone(), value);
            }
            eval(&def.body, &inner)
        }
        Expr::Laplacian(_) => Err(EvalError::Laplacian),
    }
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub(crate) fn binary(op: BinOp, a: Complex64, b: Complex64) -> Result<Complex64, EvalError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == ZERO {
                return Err(EvalError::DivisionByZero);
            }
            if a.im == 0.0 && b.im == 0.0 {
                Complex64::new(a.re / b.re, 0.0)
            } else {
                a / b
            }
        }
        BinOp::Pow => power(a, b)?,
    })
}

fn power(base: Complex64, exponent: Complex64) -> Result<Complex64, EvalError> {
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= i32::MAX as f64 {
        let n = exponent.re as i32;
        if base == ZERO {
            return if n < 0 { Err(EvalError::DivisionByZero) } else if n == 0 { Ok(Complex64::new(1.0, 0.0)) } else { Ok(ZERO) };
        }
        if base.im == 0.0 {
            return Ok(Complex64::new(base.re.powi(n), 0.0));
        }
        return Ok(base.powi(n));
    }
    if base == ZERO {
        return if exponent.re > 0.0 { Ok(ZERO) } else { Err(EvalError::DivisionByZero) };
    }
    if base.im == 0.0 && base.re > 0.0 && exponent.im == 0.0 {
        return Ok(Complex64::new(base.re.powf(exponent.re), 0.0));
    }
    Ok(base.powc(exponent))
}

fn real_arg(name: &str, z: Complex64) -> Result<f64, EvalError> {
    if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
        return Err(EvalError::Domain(format!("`{name}` needs real arguments, got {z}")));
    }
    Ok(z.re)
}

pub(crate) fn apply_builtin(f: Builtin, args: &[Complex64]) -> Result<Complex64, EvalError> {
    let z = args[0];
    let real = z.im == 0.0;
    Ok(match f {
        Builtin::Sin if real => Complex64::new(z.re.sin(), 0.0),
        Builtin::Sin => z.sin(),
        Builtin::Cos if real => Complex64::new(z.re.cos(), 0.0),
        Builtin::Cos => z.cos(),
        Builtin::Tan if real => Complex64::new(z.re.tan(), 0.0),
        Builtin::Tan => z.tan(),
        Builtin::Exp if real => Complex64::new(z.re.exp(), 0.0),
        Builtin::Exp => z.exp(),
        Builtin::Ln => {
            if z == ZERO {
                return Err(EvalError::Domain("ln(0)".into()));
            }
            if real && z.re > 0.0 {
                Complex64::new(z.re.ln(), 0.0)
            } else {
                z.ln()
            }
        }
        Builtin::Sqrt if real && z.re >= 0.0 => Complex64::new(z.re.sqrt(), 0.0),
        Builtin::Sqrt => z.sqrt(),
        Builtin::Abs => Complex64::new(z.norm(), 0.0),
        Builtin::Min | Builtin::Max => {
            let mut best = real_arg(f.name(), z)?;
            for a in &args[1..] {
                let x = real_arg(f.name(), *a)?;
                best = if f == Builtin::Min { best.min(x) } else { best.max(x) };
            }
            Complex64::new(best, 0.0)
        }
    })
}
