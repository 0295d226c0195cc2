use std::collections::BTreeMap;

use thiserror::Error;

use super::{parse_expr_with, Expr, Leaf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "tan" => Builtin::Tan,
            "exp" => Builtin::Exp,
            "ln" => Builtin::Ln,
            "sqrt" => Builtin::Sqrt,
            "abs" => Builtin::Abs,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Sqrt => "sqrt",
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
        }
    }

    /// Accepted argument counts as `(min, max)`.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Builtin::Min | Builtin::Max => (2, usize::MAX),
            _ => (1, 1),
        }
    }
}

/// A named functional form such as the Hill function.
///
/// Formals with a default may be omitted at the call site, from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub formals: Vec<(String, Option<f64>)>,
    pub body: Expr,
}

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("function `{name}` body uses `{symbol}`, which is not a formal parameter")]
    UnboundBodySymbol { name: String, symbol: String },
    #[error("function `{0}` shadows a builtin")]
    ShadowsBuiltin(String),
    #[error("function `{0}`: required formals must precede defaulted ones")]
    DefaultOrder(String),
}

impl FunctionDef {
    pub fn new(
        name: impl Into<String>,
        formals: Vec<(&str, Option<f64>)>,
        body: Expr,
    ) -> Result<FunctionDef, RegistryError> {
        let name = name.into();
        let formals: Vec<(String, Option<f64>)> =
            formals.into_iter().map(|(n, d)| (n.to_string(), d)).collect();
        let mut seen_default = false;
        for (_, default) in &formals {
            if default.is_some() {
                seen_default = true;
            } else if seen_default {
                return Err(RegistryError::DefaultOrder(name));
            }
        }
        for leaf in body.free_symbols() {
            let ok = match &leaf {
                Leaf::Sym(s) => formals.iter().any(|(f, _)| f == s),
                Leaf::Var(_) | Leaf::Param(_) => false,
            };
            if !ok {
                return Err(RegistryError::UnboundBodySymbol { name, symbol: leaf.to_string() });
            }
        }
        Ok(FunctionDef { name, formals, body })
    }

    pub fn arity(&self) -> (usize, usize) {
        let required = self.formals.iter().filter(|(_, d)| d.is_none()).count();
        (required, self.formals.len())
    }

    /// Formal bindings for a call: the given arguments followed by defaults.
    pub fn bind<'a>(&'a self, args: &'a [Expr]) -> Vec<(&'a str, Expr)> {
        self.formals
            .iter()
            .enumerate()
            .map(|(i, (name, default))| {
                let value = match args.get(i) {
                    Some(a) => a.clone(),
                    None => Expr::real(default.expect("arity checked at parse time")),
                };
                (name.as_str(), value)
            })
            .collect()
    }

    /// The body with arguments substituted for the formals.
    pub fn expand(&self, args: &[Expr]) -> Expr {
        let bound = self.bind(args);
        self.body.substitute(&|s| bound.iter().find(|(n, _)| *n == s).map(|(_, e)| e.clone()))
    }
}

/// Builtins plus registered named forms.
#[derive(Debug, Clone)]
pub struct FunctionRegistry {
    defs: BTreeMap<String, FunctionDef>,
}

impl Default for FunctionRegistry {
    /// Registers the named rate forms: Hill `H`, secretion `S`, binding `B`
    /// and dissociation `D`.
    fn default() -> Self {
        let mut reg = FunctionRegistry::empty();
        let plain = FunctionRegistry::empty();
        let def = |name: &str, formals: Vec<(&str, Option<f64>)>, body: &str| {
            let body = parse_expr_with(body, &plain).expect("builtin form body parses");
            FunctionDef::new(name, formals, body).expect("builtin form is well formed")
        };
        reg.register(def(
            "H",
            vec![("x", None), ("pmax", Some(1.0)), ("c", Some(1.0)), ("h", Some(2.0))],
            "pmax*x^h/(c^h+x^h)",
        ))
        .unwrap();
        reg.register(def("S", vec![("x", None), ("k", Some(1.0))], "k*x")).unwrap();
        reg.register(def("B", vec![("x", None), ("y", None), ("k", Some(1.0))], "k*x*y"))
            .unwrap();
        reg.register(def("D", vec![("x", None), ("k", Some(1.0))], "k*x")).unwrap();
        reg
    }
}

impl FunctionRegistry {
    /// Builtins only.
    pub fn empty() -> Self {
        FunctionRegistry { defs: BTreeMap::new() }
    }

    /// Adds or replaces a named form.
    pub fn register(&mut self, def: FunctionDef) -> Result<(), RegistryError> {
        if Builtin::from_name(&def.name).is_some() {
            return Err(RegistryError::ShadowsBuiltin(def.name));
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.defs.get(name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        Builtin::from_name(name).is_some() || self.defs.contains_key(name)
    }

    pub fn arity(&self, name: &str) -> Option<(usize, usize)> {
        Builtin::from_name(name).map(Builtin::arity).or_else(|| self.get(name).map(FunctionDef::arity))
    }

    pub fn named_forms(&self) -> impl Iterator<Item = &FunctionDef> {
        self.defs.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_has_named_forms() {
        let reg = FunctionRegistry::default();
        for name in ["H", "S", "B", "D", "sin", "max"] {
            assert!(reg.is_known(name), "{name}");
        }
        assert_eq!(reg.arity("H"), Some((1, 4)));
        assert_eq!(reg.arity("B"), Some((2, 3)));
    }

    #[test]
    fn body_must_only_use_formals() {
        let body = parse_expr_with("k*x*y", &FunctionRegistry::empty()).unwrap();
        let err = FunctionDef::new("F", vec![("x", None), ("k", Some(1.0))], body).unwrap_err();
        assert!(matches!(err, RegistryError::UnboundBodySymbol { ref symbol, .. } if symbol == "y"));
    }

    #[test]
    fn hill_expansion_uses_defaults() {
        let reg = FunctionRegistry::default();
        let e = reg.get("H").unwrap().expand(&[Expr::sym("G")]);
        assert_eq!(e.to_string(), "1*G^2/(1^2+G^2)");
    }

    #[test]
    fn builtins_cannot_be_shadowed() {
        let mut reg = FunctionRegistry::empty();
        let def = FunctionDef::new("sin", vec![("x", None)], Expr::sym("x")).unwrap();
        assert_eq!(reg.register(def), Err(RegistryError::ShadowsBuiltin("sin".into())));
    }
}
