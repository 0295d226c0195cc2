use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sskr-forge", version, about = "Build, transform, simulate and explore SSKR models")]
pub struct Cli {
    /// Print one JSON document on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true, env = "SSKR_FORGE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model and print the validation report.
    Validate { model: PathBuf },
    /// Integrate a model and write its trajectory as CSV.
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plan statements into a model spec.
    Plan {
        statements: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        /// ode, pde, petri-net or abm.
        #[arg(long, default_value = "ode")]
        goal: String,
        /// Write the plan trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the spec here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also report which frameworks are reachable.
        #[arg(long)]
        reachability: bool,
    },
    /// Apply an extension script.
    Extend {
        model: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replace a parameter by the output of a sub-model.
    Decompose {
        model: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long)]
        sub: PathBuf,
        /// Sub-model row whose variable supplies the parameter.
        #[arg(long)]
        row: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare two models row by row.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Unite two models, merging shared variables.
    Compose {
        a: PathBuf,
        b: PathBuf,
        /// Shared variable pair `a_id=b_id`; repeatable.
        #[arg(long = "share", value_parser = pair)]
        shared: Vec<(String, String)>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the GA calibration of an experiment.
    Calibrate {
        experiment: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Results directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run active learning of an experiment.
    Learn {
        experiment: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Known plausible points (CSV with parameter columns).
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the simulation document of a model.
    Emit {
        model: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Simulation config JSON; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// euler, rk2 or rk4.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Initial conditions, CSV `variable,value`.
    #[arg(long)]
    pub ic: Option<PathBuf>,
    /// Parameter override `id=value`; repeatable.
    #[arg(long = "param", value_parser = assignment)]
    pub params: Vec<(String, f64)>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Variable clamped to zero; repeatable.
    #[arg(long)]
    pub knockout: Vec<String>,
}

fn pair(s: &str) -> Result<(String, String), String> {
    let (a, b) = s.split_once('=').ok_or_else(|| format!("expected `a=b`, got `{s}`"))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn assignment(s: &str) -> Result<(String, f64), String> {
    let (id, v) = pair(s)?;
    let v = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((id, v))
}
