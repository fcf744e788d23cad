use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use curvstep::config::{self, ControllerName, ExcitationName, IntegratorName, ProblemName};
use curvstep::experiment::{self, Scorer};
use curvstep::harness::{cache_dir_from_env, BOUNCE_PERIODS};
use curvstep::io;
use curvstep::HarnessError;
use curvstep_core::models::{BounceAnalytic, BounceParams};
use curvstep_core::{Error, RunRecord};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "curvstep", version, about = "Curvature-controlled explicit time integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration; writes trajectory.csv, steps.csv and meta.json.
    Run {
        /// JSON file with flat keys; any key may also be given as a flag.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a named experiment set; writes errors.csv, steps_compare.csv,
    /// dt_history.csv and summary.json.
    Compare {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Row cap per run in each CSV.
        #[arg(long, default_value_t = 20_000)]
        max_rows: usize,
    },
    /// Closed-form height of the bouncing particle at the given times.
    Oracle {
        #[arg(required = true)]
        t: Vec<f64>,
    },
    /// List the experiment sets.
    List,
}

#[derive(Args, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
struct Flags {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    problem: Option<ProblemName>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    integrator: Option<IntegratorName>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    controller: Option<ControllerName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rejection: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    safety: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_low: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_high: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    decimation: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    excitation: Option<ExcitationName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<bool>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn io_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Json(_) => EXIT_IO,
        HarnessError::Run(_) => EXIT_DIVERGED,
        _ => 1,
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Diverged { .. } | Error::StepUnderflow { .. } | Error::NonFinite(_))
}

#[derive(Serialize)]
struct Summary {
    status: &'static str,
    error: Option<String>,
    t_final: Option<f64>,
    force_evaluations: u64,
    accepted_steps: u64,
    discarded_steps: u64,
    total_steps: u64,
    rejections: u64,
    min_dt: Option<f64>,
    max_dt: Option<f64>,
    max_error: Option<f64>,
    error_metric: Option<experiment::Metric>,
}

fn write_outputs(out: &Path, rec: &RunRecord, meta: &Value) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out)?;
    io::write_trajectory(&out.join("trajectory.csv"), rec)?;
    io::write_steps(&out.join("steps.csv"), rec)?;
    io::write_json(&out.join("meta.json"), meta)
}

fn cmd_run(config_file: Option<PathBuf>, out: PathBuf, flags: Flags) -> ExitCode {
    let text = match config_file.as_deref().map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("cannot read config: {e}")),
    };
    let overrides = match serde_json::to_value(&flags) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    let (cfg, echo) = match config::merge(text.as_deref(), overrides) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let spec = match cfg.to_spec() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };

    let (rec, failure) = match spec.execute() {
        Ok(rec) => (rec, None),
        Err(f) if is_divergence(&f.error) => (f.partial, Some(f.error)),
        Err(f) => return fail(EXIT_CONFIG, f.error),
    };

    let mut max_error = None;
    let mut error_metric = None;
    if failure.is_none() && cfg.reference.unwrap_or(false) {
        let scored = Scorer::new(&spec.problem, cache_dir_from_env().as_deref())
            .and_then(|s| Ok((s.metric(), s.score(&rec)?.max())));
        match scored {
            Ok((metric, e)) => {
                max_error = Some(e);
                error_metric = Some(metric);
            }
            Err(e) => return fail(io_code(&e), e),
        }
    }

    let summary = Summary {
        status: if failure.is_some() { "diverged" } else { "completed" },
        error: failure.as_ref().map(|e| e.to_string()),
        t_final: rec.last().map(|s| s.t),
        force_evaluations: rec.force_evaluations,
        accepted_steps: rec.accepted_steps,
        discarded_steps: rec.discarded_steps,
        total_steps: rec.accepted_steps + rec.discarded_steps,
        rejections: rec.rejections,
        min_dt: rec.min_dt(),
        max_dt: rec.max_dt(),
        max_error,
        error_metric,
    };
    let meta = json!({
        "config": echo,
        "run": {
            "problem": spec.problem.name(),
            "integrator": spec.integrator.to_string(),
            "controller": format!("{:?}", spec.controller),
            "t_end": spec.t_end,
            "decimation": spec.decimation,
            "fingerprint": spec.fingerprint(),
        },
        "summary": summary,
    });
    if let Err(e) = write_outputs(&out, &rec, &meta) {
        return fail(EXIT_IO, e);
    }
    match failure {
        Some(e) => fail(EXIT_DIVERGED, format!("run diverged: {e}; partial output written")),
        None => {
            println!(
                "{}: {} force evaluations, {} rejections, t = {}",
                spec.name,
                rec.force_evaluations,
                rec.rejections,
                rec.last().map_or(f64::NAN, |s| s.t)
            );
            ExitCode::SUCCESS
        }
    }
}

fn cmd_compare(name: &str, out: &Path, max_rows: usize) -> ExitCode {
    let Some(exp) = experiment::find_experiment(name) else {
        return fail(
            EXIT_CONFIG,
            format!("unknown experiment `{name}`; known: {}", experiment::EXPERIMENT_NAMES.join(", ")),
        );
    };
    let cmp = match experiment::compare(&exp, cache_dir_from_env().as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(io_code(&e), e),
    };
    print!("{}", cmp.report());
    if let Err(e) = experiment::write_comparison(out, &cmp, max_rows) {
        return fail(EXIT_IO, e);
    }
    ExitCode::SUCCESS
}

fn cmd_oracle(times: &[f64]) -> ExitCode {
    let exact = match BounceAnalytic::new(BounceParams::default()) {
        Ok(e) => e,
        Err(e) => return fail(1, e),
    };
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return fail(EXIT_CONFIG, format!("time must be finite and nonnegative, got {t}"));
        }
        println!("{t} {}", exact.height(t));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, flags } => cmd_run(config, out, flags),
        Command::Compare { name, out, max_rows } => cmd_compare(&name, &out, max_rows),
        Command::Oracle { t } => cmd_oracle(&t),
        Command::List => {
            for exp in experiment::experiment_catalog() {
                let runs: Vec<&str> = exp.runs.iter().map(|r| r.name.as_str()).collect();
                println!("{:<20} {}", exp.name, runs.join(", "));
            }
            println!("(bounce horizons span {BOUNCE_PERIODS} periods)");
            ExitCode::SUCCESS
        }
    }
}
