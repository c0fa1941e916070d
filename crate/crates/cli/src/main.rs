//! `lbt`: batch front end for Liouville billiard table numerics.
//!
//! Every command writes `<out>/<command>.csv` and a JSON sidecar
//! `<out>/<command>.json`. Exit status 2 marks configuration errors and 3
//! numerical failures, with the failing point recorded in the sidecar.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::{FunctionSpec, Grid, RunConfig, TableDoc};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric { message: String, point: Vec<(String, f64)> },
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric { message, point } => {
                write!(f, "numerical failure: {message} at")?;
                for (k, v) in point {
                    write!(f, " {k}={v:?}")?;
                }
                Ok(())
            }
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "lbt", version, about = "Liouville billiard table scans and certificates")]
struct Args {
    /// One of: validate, trajectory, conserve, actions, freq-scan,
    /// jacobian-scan, rotation, radon-scan, rigidity, rational-orbit.
    command: String,
    /// Table JSON document (defaults to the built-in trig table (2, 1, -1, 2π, 2π, 1)).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Integrator tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// κ₁ grid `a:b:n`.
    #[arg(long)]
    k1: Option<String>,
    /// κ₂ grid `a:b:n` (the κ grid for `rotation`).
    #[arg(long)]
    k2: Option<String>,
    #[arg(long, default_value_t = 100)]
    bounces: usize,
    /// Number of seeded starts for `conserve`.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Derivative order for `validate`.
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Maximum monomial degree for `rigidity`.
    #[arg(long, default_value_t = 8)]
    degree: usize,
    /// Boundary function: `const:c` or `trig:j,l,c;...`.
    #[arg(long, default_value = "const:1")]
    function: String,
    /// Rational target `(p/n, q/n)` for `rational-orbit`.
    #[arg(long, default_value_t = 3, allow_negative_numbers = true)]
    p: i64,
    #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
    q: i64,
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    n: i64,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    if !commands::COMMANDS.contains(&args.command.as_str()) {
        return Err(CliError::Config(format!(
            "unknown command {:?}; expected one of {}",
            args.command,
            commands::COMMANDS.join(", ")
        )));
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Config("--tol must be positive".into()));
    }
    if args.starts == 0 {
        return Err(CliError::Config("--starts must be positive".into()));
    }
    let table = match &args.table {
        Some(path) => TableDoc::read(path)?,
        None => TableDoc::cf1(),
    };
    Ok(RunConfig {
        command: args.command.clone(),
        table,
        k1: args.k1.as_deref().map(Grid::parse).transpose()?,
        k2: args.k2.as_deref().map(Grid::parse).transpose()?,
        tol: args.tol,
        seed: args.seed,
        bounces: args.bounces,
        starts: args.starts,
        order: args.order,
        degree: args.degree,
        function: FunctionSpec::parse(&args.function)?,
        pqn: (args.p, args.q, args.n),
    })
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("LBT_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("LBT_THREADS={s:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn io(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, table: &commands::Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(&table.header).map_err(|e| io(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

fn write_sidecar(out: &Path, cfg: &RunConfig, result: &Result<commands::Table, CliError>) -> Result<(), CliError> {
    let mut doc = json!({
        "command": cfg.command,
        "config_hash": cfg.hash(),
        "config": cfg,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    match result {
        Ok(t) => {
            doc["status"] = json!("ok");
            doc["rows"] = json!(t.rows.len());
        }
        Err(e) => {
            doc["status"] = json!("failed");
            doc["error"] = json!(e.to_string());
            if let CliError::Numeric { point, .. } = e {
                let p: serde_json::Map<String, serde_json::Value> =
                    point.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                doc["failing_point"] = serde_json::Value::Object(p);
            }
        }
    }
    let path = out.join(format!("{}.json", cfg.command));
    let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = build_config(args)?;
    let threads = threads()?;
    let table = cfg.table.build()?;
    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    let result = lbt_core::par::with_threads(threads, || commands::run(&cfg, &table));
    if let Err(CliError::Config(_)) = result {
        return result.map(|_| ());
    }
    if let Ok(t) = &result {
        write_csv(&args.out.join(format!("{}.csv", cfg.command)), t)?;
    }
    write_sidecar(&args.out, &cfg, &result)?;
    result.map(|_| ())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lbt: {e}");
            ExitCode::from(e.code())
        }
    }
}
