mod args;
mod commands;
mod experiment;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::PlanArgs;
use report::{CliError, Exit, Outcome};

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Validate { model } => commands::validate_cmd(model),
        Command::Simulate { model, sim, output } => commands::simulate_cmd(model, sim, output.as_deref()),
        Command::Plan { statements, rules, ontology, goal, trace, output, reachability } => commands::plan_cmd(&PlanArgs {
            statements,
            rules,
            ontology,
            goal,
            trace: trace.as_deref(),
            output: output.as_deref(),
            reachability: *reachability,
        }),
        Command::Extend { model, script, output } => commands::extend_cmd(model, script, output),
        Command::Decompose { model, param, sub, row, output } => commands::decompose_cmd(model, param, sub, row, output),
        Command::Compare { a, b, samples, tol, seed } => commands::compare_cmd(a, b, *samples, *tol, *seed),
        Command::Compose { a, b, shared, output } => commands::compose_cmd(a, b, shared, output),
        Command::Calibrate { experiment, seed, output } => commands::calibrate_cmd(experiment, *seed, output),
        Command::Learn { experiment, seed, ensemble, output } => {
            commands::learn_cmd(experiment, *seed, ensemble.as_deref(), output)
        }
        Command::Emit { model, sim, output } => commands::emit_cmd(model, sim, output.as_deref()),
    }
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Validate { .. } => "validate",
        Command::Simulate { .. } => "simulate",
        Command::Plan { .. } => "plan",
        Command::Extend { .. } => "extend",
        Command::Decompose { .. } => "decompose",
        Command::Compare { .. } => "compare",
        Command::Compose { .. } => "compose",
        Command::Calibrate { .. } => "calibrate",
        Command::Learn { .. } => "learn",
        Command::Emit { .. } => "emit",
    }
}

fn print_json(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn fail(json: bool, command: Option<&str>, e: &CliError) -> ExitCode {
    eprintln!("error: {}", e.message);
    if json {
        print_json(&json!({
            "command": command,
            "ok": false,
            "exit_code": e.exit as u8,
            "error": e.message,
            "detail": e.detail,
        }));
    }
    ExitCode::from(e.exit as u8)
}

fn init_threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot set up {n} threads: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let wants_json = std::env::args().skip(1).any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            if wants_json {
                eprint!("{message}");
                print_json(&json!({ "command": null, "ok": false, "exit_code": Exit::Usage as u8, "error": message.trim_end() }));
            } else {
                let _ = e.print();
            }
            return ExitCode::from(Exit::Usage as u8);
        }
    };
    let name = command_name(&cli);
    if let Err(e) = init_threads(cli.threads) {
        return fail(cli.json, Some(name), &e);
    }
    match dispatch(&cli) {
        Ok(outcome) => {
            if cli.json {
                let mut doc = json!({ "command": name, "ok": outcome.exit == Exit::Success, "exit_code": outcome.exit as u8 });
                if let (Some(obj), serde_json::Value::Object(extra)) = (doc.as_object_mut(), outcome.json) {
                    obj.extend(extra);
                }
                print_json(&doc);
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => fail(cli.json, Some(name), &e),
    }
}
