use std::collections::BTreeSet;
use std::fmt::Write;

use super::compile::compile;
use super::solve::SimConfig;
use super::SimError;
use crate::cma::ModelSpec;
use crate::expr::Leaf;

fn list<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    items.into_iter().collect::<Vec<_>>().join(", ")
}

/// Plain-text simulator specification: model header, species, one line
/// per term tagged with its rate form, and the solver block.
pub fn emit_simulation_document(spec: &ModelSpec, cfg: &SimConfig) -> Result<String, SimError> {
    let m = compile(spec, &cfg.params)?;
    cfg.validate(&m.variables)?;
    let species: BTreeSet<&str> = spec.variables.iter().map(String::as_str).collect();

    let mut out = String::new();
    writeln!(out, "model = {{").unwrap();
    writeln!(out, "    type = DynamicReactionRuleModel;").unwrap();
    writeln!(out, "    name = {};", spec.name).unwrap();
    writeln!(out, "    framework = {};", spec.framework).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "    species = ({});", list(spec.variables.iter().map(String::as_str))).unwrap();
    let params: Vec<String> = m.parameter_values().map(|(id, v)| format!("{id}={v}")).collect();
    writeln!(out, "    parameters = ({});", params.join(", ")).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "    reactions = (").unwrap();
    let mut r = 0;
    for d in &spec.derivatives {
        for term in &d.terms {
            r += 1;
            let reactants: Vec<String> = term
                .expr
                .free_symbols()
                .into_iter()
                .filter_map(|l| match l {
                    Leaf::Sym(s) if species.contains(s.as_str()) => Some(s),
                    _ => None,
                })
                .collect();
            writeln!(
                out,
                "        {{type=signal; name=r{r}; products=({}); reactants=({}); rate={}; term={};}}, // {}",
                d.variable,
                reactants.join(","),
                term.rate_form(),
                term.expr,
                term.origin
            )
            .unwrap();
        }
    }
    writeln!(out, "    );").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "    solver = {{").unwrap();
    writeln!(out, "        numericalScheme = {};", cfg.solver).unwrap();
    writeln!(out, "        dt = {};", cfg.dt).unwrap();
    writeln!(out, "        t_end = {};", cfg.t_end).unwrap();
    writeln!(out, "        stride = {};", cfg.stride).unwrap();
    let initial: Vec<String> = spec.variables.iter().map(|v| format!("{v}={}", cfg.initial[v])).collect();
    writeln!(out, "        initial = ({});", initial.join(", ")).unwrap();
    writeln!(out, "        knockout = ({});", list(cfg.knockout.iter().map(String::as_str))).unwrap();
    writeln!(out, "    }};").unwrap();
    writeln!(out, "}};").unwrap();
    Ok(out)
}
