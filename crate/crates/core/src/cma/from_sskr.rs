use thiserror::Error;

use super::spec::{is_mass_action, Derivative, Framework, ModelSpec, SpecParameter, Term, Transition};
use crate::expr::Expr;
use crate::sskr::{Sskr, TimeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("ODE output needs continuous time; the model's DDT says {0:?}")]
    DdtMismatch(TimeKind),
    #[error("row `{label}` cannot be turned into a spec entry: {reason}")]
    UnresolvableRow { label: String, reason: String },
}

/// The variable a row label `d<var>/dt`, optionally followed by a
/// bracketed qualifier, is the derivative of.
pub fn derivative_target<'a>(label: &'a str, s: &Sskr) -> Option<&'a str> {
    let rest = label.strip_prefix('d')?;
    let (var, tail) = rest.split_once("/dt")?;
    let tail = tail.trim_start();
    if !(tail.is_empty() || tail.starts_with('[')) {
        return None;
    }
    s.column(var).map(|_| var)
}

pub fn spec_from_sskr(s: &Sskr) -> Result<ModelSpec, SpecError> {
    if s.ddt.time != TimeKind::Continuous {
        return Err(SpecError::DdtMismatch(s.ddt.time));
    }
    // A computed parameter reads the variable its sub-model row produces.
    let computed: Vec<(String, Expr)> = s
        .parameters
        .iter()
        .filter_map(|p| {
            let row = &p.computed.as_ref()?.row;
            Some((p.id.clone(), Expr::sym(derivative_target(row, s)?)))
        })
        .collect();

    let mut spec = ModelSpec::empty(&s.name, Framework::Ode);
    spec.variables = s.variables.iter().map(|v| v.id.clone()).collect();
    spec.parameters = s
        .parameters
        .iter()
        .filter(|p| !computed.iter().any(|(id, _)| *id == p.id))
        .map(|p| SpecParameter { id: p.id.clone(), value: p.value })
        .collect();

    let mut derivatives: Vec<Derivative> =
        spec.variables.iter().map(|v| Derivative { variable: v.clone(), terms: Vec::new() }).collect();
    for (i, label) in s.mrm.rows.iter().enumerate() {
        let unresolvable = |reason: String| SpecError::UnresolvableRow { label: label.clone(), reason };
        let form = s.mrs.rows.get(i).ok_or_else(|| unresolvable("no MRS entry".into()))?;
        let resolved = s
            .resolve(i + 1, &form.primary)
            .map_err(|e| unresolvable(e.to_string()))?
            .substitute(&|name| computed.iter().find(|(id, _)| id == name).map(|(_, e)| e.clone()));
        let terms: Vec<Term> =
            resolved.summands().into_iter().map(|expr| Term { expr, origin: label.clone() }).collect();
        match derivative_target(label, s) {
            Some(var) => {
                let entry = derivatives.iter_mut().find(|d| d.variable == var).expect("known column");
                if terms.iter().any(|t| t.expr.contains_laplacian()) {
                    spec.pde.insert(var.to_string());
                }
                entry.terms.extend(terms);
            }
            None if terms.iter().all(|t| is_mass_action(&t.expr)) => {
                spec.transitions.push(Transition { label: label.clone(), terms });
            }
            None => return Err(unresolvable("not a d<var>/dt row and not mass-action".into())),
        }
    }
    spec.derivatives = derivatives.into_iter().filter(|d| !d.terms.is_empty()).collect();
    spec.framework = if !spec.transitions.is_empty() {
        Framework::PetriNet
    } else if !spec.pde.is_empty() {
        Framework::Pde
    } else {
        Framework::Ode
    };
    Ok(spec)
}
