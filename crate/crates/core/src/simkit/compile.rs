use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use super::SimError;
use crate::cma::{Framework, ModelSpec};
use crate::expr::eval::{apply_builtin, binary, default_registry};
use crate::expr::{BinOp, Builtin, Expr};

/// Expression tree with every leaf resolved to a slot.
#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(Complex64),
    State(usize),
    Param(usize),
    Time,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Builtin(Builtin, Vec<Node>),
}

/// Why a derivative could not be produced at some state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Fault {
    NonFinite(usize),
    Complex(usize, Complex64),
    Eval(usize, String),
}

impl Fault {
    pub(crate) fn into_error(self, m: &ExecutableModel, step: usize) -> SimError {
        let name = |i: usize| m.variables[i].clone();
        match self {
            Fault::NonFinite(i) => SimError::NumericalBlowup { step, variable: name(i) },
            Fault::Complex(i, value) => SimError::ComplexValue { variable: name(i), value },
            Fault::Eval(i, reason) => SimError::Eval { variable: name(i), reason },
        }
    }
}

struct Singular;

impl Node {
    fn eval(&self, x: &[f64], p: &[f64], t: f64) -> Result<Complex64, Result<Singular, String>> {
        let real = |v: f64| Complex64::new(v, 0.0);
        Ok(match self {
            Node::Const(c) => *c,
            Node::State(i) => real(x[*i]),
            Node::Param(i) => real(p[*i]),
            Node::Time => real(t),
            Node::Neg(a) => -a.eval(x, p, t)?,
            Node::Binary(op, a, b) => binary(*op, a.eval(x, p, t)?, b.eval(x, p, t)?).map_err(classify)?,
            Node::Builtin(f, args) => {
                let values = args.iter().map(|a| a.eval(x, p, t)).collect::<Result<Vec<_>, _>>()?;
                apply_builtin(*f, &values).map_err(classify)?
            }
        })
    }
}

fn classify(e: crate::expr::EvalError) -> Result<Singular, String> {
    if e.is_singular() {
        Ok(Singular)
    } else {
        Err(e.to_string())
    }
}

/// A spec compiled against concrete parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutableModel {
    pub name: String,
    pub variables: Vec<String>,
    pub parameters: Vec<String>,
    values: Vec<f64>,
    rhs: Vec<Vec<Node>>,
}

struct Slots<'a> {
    variables: &'a HashMap<&'a str, usize>,
    parameters: &'a HashMap<&'a str, usize>,
}

impl Slots<'_> {
    fn lower(&self, e: &Expr, depth: usize) -> Result<Node, String> {
        if depth > 64 {
            return Err("named forms nest too deeply".into());
        }
        Ok(match e {
            Expr::Const(c) => Node::Const(*c),
            Expr::Sym(s) => match (self.variables.get(s.as_str()), self.parameters.get(s.as_str())) {
                (Some(&i), _) => Node::State(i),
                (None, Some(&i)) => Node::Param(i),
                (None, None) if s == "t" => Node::Time,
                _ => return Err(format!("unbound symbol `{s}`")),
            },
            Expr::Var(_) | Expr::Param(_) => return Err(format!("unresolved reference `{e}`")),
            Expr::Neg(a) => Node::Neg(Box::new(self.lower(a, depth)?)),
            Expr::Binary(op, a, b) => Node::Binary(*op, Box::new(self.lower(a, depth)?), Box::new(self.lower(b, depth)?)),
            Expr::Call(name, args) => {
                if let Some(f) = Builtin::from_name(name) {
                    let args = args.iter().map(|a| self.lower(a, depth)).collect::<Result<_, _>>()?;
                    return Ok(Node::Builtin(f, args));
                }
                let def = default_registry().get(name).ok_or_else(|| format!("unknown function `{name}`"))?;
                self.lower(&def.expand(args), depth + 1)?
            }
            Expr::Laplacian(_) => return Err("laplacian".into()),
        })
    }
}

/// Compiles `spec` with `params` overriding the spec's parameter values.
pub fn compile(spec: &ModelSpec, params: &BTreeMap<String, f64>) -> Result<ExecutableModel, SimError> {
    match spec.framework {
        Framework::Ode => {}
        Framework::Pde => {}
        other => return Err(SimError::UnsupportedFramework(other)),
    }
    if let Some(v) = spec.pde.iter().next() {
        return Err(SimError::UnsupportedPde(v.clone()));
    }
    for d in &spec.derivatives {
        if d.terms.iter().any(|t| t.expr.contains_laplacian()) {
            return Err(SimError::UnsupportedPde(d.variable.clone()));
        }
    }
    for id in params.keys() {
        if !spec.parameters.iter().any(|p| &p.id == id) {
            return Err(SimError::UnknownParameter(id.clone()));
        }
    }
    let mut values = Vec::with_capacity(spec.parameters.len());
    for p in &spec.parameters {
        let v = params.get(&p.id).copied().or(p.value).ok_or_else(|| SimError::UnresolvedParameter(p.id.clone()))?;
        values.push(v);
    }

    let variables: HashMap<&str, usize> = spec.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let parameters: HashMap<&str, usize> =
        spec.parameters.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let slots = Slots { variables: &variables, parameters: &parameters };
    let mut rhs = vec![Vec::new(); spec.variables.len()];
    for d in &spec.derivatives {
        let i = *variables.get(d.variable.as_str()).ok_or_else(|| SimError::BadTerm {
            variable: d.variable.clone(),
            term: String::new(),
            reason: "not a spec variable".into(),
        })?;
        for term in &d.terms {
            let node = slots.lower(&term.expr, 0).map_err(|reason| SimError::BadTerm {
                variable: d.variable.clone(),
                term: term.expr.to_string(),
                reason,
            })?;
            rhs[i].push(node);
        }
    }
    Ok(ExecutableModel {
        name: spec.name.clone(),
        variables: spec.variables.clone(),
        parameters: spec.parameters.iter().map(|p| p.id.clone()).collect(),
        values,
        rhs,
    })
}

const RESIDUE: f64 = 1e-12;

impl ExecutableModel {
    pub fn dimension(&self) -> usize {
        self.variables.len()
    }

    pub fn parameter_values(&self) -> impl Iterator<Item = (&str, f64)> {
        self.parameters.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    pub fn parameter(&self, id: &str) -> Option<f64> {
        self.parameters.iter().position(|p| p == id).map(|i| self.values[i])
    }

    /// A copy with some parameter values replaced.
    pub fn with_params(&self, overrides: &BTreeMap<String, f64>) -> Result<ExecutableModel, SimError> {
        let mut out = self.clone();
        for (id, v) in overrides {
            let i = self.parameters.iter().position(|p| p == id).ok_or_else(|| SimError::UnknownParameter(id.clone()))?;
            out.values[i] = *v;
        }
        Ok(out)
    }

    pub fn index_of(&self, variable: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == variable)
    }

    pub(crate) fn rhs_into(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), Fault> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Fault::NonFinite(i));
        }
        for (i, terms) in self.rhs.iter().enumerate() {
            let mut sum = Complex64::new(0.0, 0.0);
            for node in terms {
                match node.eval(x, &self.values, t) {
                    Ok(v) => sum += v,
                    Err(Ok(Singular)) => return Err(Fault::NonFinite(i)),
                    Err(Err(reason)) => return Err(Fault::Eval(i, reason)),
                }
            }
            if !sum.re.is_finite() || !sum.im.is_finite() {
                return Err(Fault::NonFinite(i));
            }
            if sum.im.abs() > RESIDUE * (1.0 + sum.re.abs()) {
                return Err(Fault::Complex(i, sum));
            }
            out[i] = sum.re;
        }
        Ok(())
    }

    /// Derivative vector at state `x`, time `t`.
    pub fn rhs(&self, x: &[f64], t: f64) -> Result<Vec<f64>, SimError> {
        assert_eq!(x.len(), self.dimension(), "state dimension");
        let mut out = vec![0.0; x.len()];
        self.rhs_into(x, t, &mut out).map_err(|f| f.into_error(self, 0))?;
        Ok(out)
    }
}
