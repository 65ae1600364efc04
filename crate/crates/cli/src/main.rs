use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

mod commands;
mod config;
mod output;

use commands::{exit_code_for, Outcome};
use config::{Command, GridSpec, Overrides, ProfileKindArg, Scenario, ScenarioConfig, ToleranceSpec};
use output::{write_atomic, Table};

/// Numerical checks of the Riemannian Penrose inequality on rotationally
/// symmetric, conformally flat manifolds.
///
/// Every flag overrides the matching field of the `--config` file. Without a
/// subcommand the config's `command` field is run.
#[derive(Parser, Debug)]
#[command(name = "penrose-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Option<Command>,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report.json and the CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave wall_time_s out of the report, making it byte-for-byte reproducible
    #[arg(long)]
    omit_timing: bool,

    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    profile: Option<ProfileKindArg>,
    /// Schwarzschild mass
    #[arg(long)]
    mass: Option<f64>,
    /// Two-column `r u` table (selects the tabulated profile)
    #[arg(long)]
    table: Option<PathBuf>,
    /// Trumpet gluing radius
    #[arg(long)]
    gluing_radius: Option<f64>,
    /// Trumpet alpha
    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long)]
    r_lo: Option<f64>,
    #[arg(long)]
    r_hi: Option<f64>,
    #[arg(long)]
    grid_count: Option<usize>,

    #[arg(long)]
    quad_abs_tol: Option<f64>,
    #[arg(long)]
    quad_rel_tol: Option<f64>,
    #[arg(long)]
    el_tol: Option<f64>,
    #[arg(long)]
    equality_tol: Option<f64>,

    /// Anchor radius of the mu-bubble problems
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated schedule for `horizon`
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            profile: self.profile,
            mass: self.mass,
            table: self.table.clone(),
            gluing_radius: self.gluing_radius,
            alpha: self.alpha,
            grid: GridSpec { r_lo: self.r_lo, r_hi: self.r_hi, count: self.grid_count },
            tolerances: ToleranceSpec {
                quad_abs: self.quad_abs_tol,
                quad_rel: self.quad_rel_tol,
                el_residual: self.el_tol,
                equality: self.equality_tol,
            },
            r0: self.r0,
            epsilon: self.epsilon,
            epsilons: self.epsilons.clone(),
            gamma: self.gamma,
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    status: &'static str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    config: Value,
    results: Value,
    verdicts: BTreeMap<String, String>,
    tables: BTreeMap<String, Table>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn status_for(code: u8) -> &'static str {
    match code {
        commands::EXIT_OK => "ok",
        commands::EXIT_CONFIG => "config-error",
        commands::EXIT_VIOLATED => "violated",
        commands::EXIT_DEGENERATE => "degenerate",
        commands::EXIT_TRUMPET => "verification-failed",
        _ => "error",
    }
}

/// Runs one scenario, writing its files under `out` when given. Errors are
/// folded into the report.
fn run_scenario(s: &Scenario, out: Option<&Path>, timing: bool) -> RunReport {
    let start = Instant::now();
    let result = commands::run(s).and_then(|o| {
        if let Some(dir) = out {
            write_files(dir, &o)?;
        }
        Ok(o)
    });
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => {
            let code = exit_code_for(&e);
            let o = Outcome {
                results: Value::Null,
                verdicts: BTreeMap::new(),
                tables: Vec::new(),
                files: Vec::new(),
                exit_code: code,
            };
            (o, Some(format!("{e:#}")))
        }
    };
    RunReport {
        command: s.command.as_str(),
        name: s.name.clone(),
        status: status_for(outcome.exit_code),
        exit_code: outcome.exit_code,
        error,
        config: serde_json::to_value(s).unwrap_or(Value::Null),
        results: outcome.results,
        verdicts: outcome.verdicts,
        tables: outcome.tables.into_iter().map(|t| (t.name.clone(), t)).collect(),
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn write_files(dir: &Path, o: &Outcome) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for t in &o.tables {
        write_atomic(dir, &format!("{}.csv", t.name), &t.to_csv()?)?;
    }
    for (name, bytes) in &o.files {
        write_atomic(dir, name, bytes)?;
    }
    Ok(())
}

fn run_batch(s: &Scenario, out: Option<&Path>, timing: bool) -> RunReport {
    let start = Instant::now();
    let reports: Vec<RunReport> = s
        .scenarios
        .par_iter()
        .map(|sub| {
            let dir = out.map(|d| d.join(sub.name.as_deref().unwrap_or("scenario")));
            run_scenario(sub, dir.as_deref(), timing)
        })
        .collect();
    let code = reports
        .iter()
        .map(|r| r.exit_code)
        .find(|&c| c != commands::EXIT_OK)
        .unwrap_or(commands::EXIT_OK);
    let verdicts = reports
        .iter()
        .map(|r| (r.name.clone().unwrap_or_default(), r.status.to_string()))
        .collect();
    RunReport {
        command: "batch",
        name: s.name.clone(),
        status: status_for(code),
        exit_code: code,
        error: None,
        config: serde_json::to_value(s).unwrap_or(Value::Null),
        results: serde_json::json!({ "scenarios": reports }),
        verdicts,
        tables: BTreeMap::new(),
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.flags.config.as_deref().map(ScenarioConfig::from_file).transpose() {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let scenario = match config::resolve(file, cli.command, &cli.flags.overrides()) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let out = cli.flags.out.as_deref();
    let timing = !cli.flags.omit_timing;
    let report = if scenario.command == Command::Batch {
        run_batch(&scenario, out, timing)
    } else {
        run_scenario(&scenario, out, timing)
    };
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    let text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t + "\n",
        Err(e) => return fail(&e.into()),
    };
    if let Some(dir) = out {
        let written = fs::create_dir_all(dir)
            .map_err(anyhow::Error::from)
            .and_then(|_| write_atomic(dir, "report.json", text.as_bytes()));
        if let Err(e) = written {
            return fail(&e);
        }
    }
    print!("{text}");
    ExitCode::from(report.exit_code)
}

fn fail(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(exit_code_for(e))
}
