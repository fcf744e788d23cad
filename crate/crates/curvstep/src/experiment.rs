//! Named experiment sets and their comparisons.

use std::path::Path;

use serde::Serialize;

use curvstep_core::models::{BounceAnalytic, Dolly};
use curvstep_core::{IntegratorKind, RunRecord};

use crate::analysis::{drop_onsets, onsets_aligned, peak_rows, ratio_fraction, DtHistory};
use crate::harness::{
    error_vs_exact, error_vs_reference, ground_force_channel, reference_run, reference_spec,
    ControllerSpec, ErrorMode, ErrorSeries, Interpolant, Problem, RunSpec, BOUNCE_FIXED_FRACTION,
    DEFAULT_CHUNG_LEE_BETA, DEFAULT_RHO_B,
};
use crate::{io, HarnessError};

pub const EXPERIMENT_NAMES: [&str; 4] =
    ["dolly-controllers", "bounce-controllers", "dolly-integrators", "bounce-integrators"];

/// Step-size drops count as major when the mean step of a sub-interval
/// falls below this fraction of the previous sub-interval's mean.
pub const DROP_FRACTION: f64 = 0.1;
/// Dt-history agreement between integrators: ratio band and required coverage.
pub const RATIO_BAND: (f64, f64) = (0.5, 2.0);
pub const RATIO_COVERAGE: f64 = 0.95;
/// Required error improvement of curvature control over the fine fixed step.
pub const BOUNCE_ERROR_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Absolute error of the ground force under wheel 1 against the fine reference [N].
    DollyGroundForce,
    /// Height error against the closed form, divided by the drop height.
    BounceHeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: &'static str,
    pub problem: Problem,
    pub metric: Metric,
    pub runs: Vec<RunSpec>,
}

fn integrator_sweep(problem: Problem) -> curvstep_core::Result<Vec<RunSpec>> {
    let ctrl = ControllerSpec::Curvature(problem.curvature_config()?);
    Ok(vec![
        RunSpec::new("cdm", problem, ctrl)?,
        RunSpec::new("eg-alpha", problem, ctrl)?.with_integrator(IntegratorKind::EgAlpha { rho_b: DEFAULT_RHO_B }),
        RunSpec::new("chung-lee", problem, ctrl)?
            .with_integrator(IntegratorKind::ChungLee { beta: DEFAULT_CHUNG_LEE_BETA }),
    ])
}

fn build(name: &str) -> curvstep_core::Result<Option<Experiment>> {
    let exp = match name {
        "dolly-controllers" => {
            let p = Problem::dolly();
            let bounds = p.bounds()?;
            Experiment {
                name: "dolly-controllers",
                problem: p,
                metric: Metric::DollyGroundForce,
                runs: vec![
                    RunSpec::new("fixed-min", p, ControllerSpec::Fixed { dt: bounds.min })?,
                    RunSpec::new("fixed-max", p, ControllerSpec::Fixed { dt: bounds.max })?,
                    RunSpec::new("curvature", p, ControllerSpec::Curvature(p.curvature_config()?))?,
                    RunSpec::new("apparent-frequency", p, ControllerSpec::apparent_frequency(bounds))?,
                    RunSpec::new("local-error", p, ControllerSpec::local_error(bounds)?)?,
                ],
            }
        }
        "bounce-controllers" => {
            let p = Problem::bounce();
            let Problem::Bounce(params) = p else { unreachable!() };
            let bounds = p.bounds()?;
            Experiment {
                name: "bounce-controllers",
                problem: p,
                metric: Metric::BounceHeight,
                runs: vec![
                    RunSpec::new("fixed", p, ControllerSpec::Fixed { dt: BOUNCE_FIXED_FRACTION * params.dt_crit })?,
                    RunSpec::new("curvature", p, ControllerSpec::Curvature(p.curvature_config()?))?,
                    RunSpec::new("local-error", p, ControllerSpec::local_error(bounds)?)?,
                ],
            }
        }
        "dolly-integrators" => Experiment {
            name: "dolly-integrators",
            problem: Problem::dolly(),
            metric: Metric::DollyGroundForce,
            runs: integrator_sweep(Problem::dolly())?,
        },
        "bounce-integrators" => Experiment {
            name: "bounce-integrators",
            problem: Problem::bounce(),
            metric: Metric::BounceHeight,
            runs: integrator_sweep(Problem::bounce())?,
        },
        _ => return Ok(None),
    };
    Ok(Some(exp))
}

pub fn find_experiment(name: &str) -> Option<Experiment> {
    build(name).expect("catalog parameters are valid")
}

pub fn experiment_catalog() -> Vec<Experiment> {
    EXPERIMENT_NAMES.iter().filter_map(|n| find_experiment(n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub integrator: String,
    pub controller: String,
    pub force_evaluations: u64,
    pub accepted_steps: u64,
    pub discarded_steps: u64,
    pub rejections: u64,
    pub max_error: f64,
    pub min_dt: Option<f64>,
    pub max_dt: Option<f64>,
}

/// What a comparison keeps of one run once its full record is dropped.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub summary: RunSummary,
    pub errors: ErrorSeries,
    pub dt: DtHistory,
    /// `(t, cumulative force evaluations)`
    pub steps: Vec<(f64, u64)>,
}

impl RunOutcome {
    /// Cumulative force evaluations at the last step ending at or before `t`.
    pub fn steps_at(&self, t: f64) -> u64 {
        let i = self.steps.partition_point(|s| s.0 <= t);
        if i == 0 {
            0
        } else {
            self.steps[i - 1].1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub experiment: &'static str,
    pub metric: Metric,
    pub outcomes: Vec<RunOutcome>,
    pub checks: Vec<Check>,
}

impl Comparison {
    pub fn outcome(&self, name: &str) -> Option<&RunOutcome> {
        self.outcomes.iter().find(|o| o.spec.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn report(&self) -> String {
        let mut s = format!("experiment {} (metric: {:?})\n", self.experiment, self.metric);
        s += &format!(
            "{:<20} {:>10} {:>8} {:>10} {:>14} {:>12} {:>12}\n",
            "run", "force-evals", "rejects", "discarded", "max-error", "min-dt", "max-dt"
        );
        for o in &self.outcomes {
            let r = &o.summary;
            s += &format!(
                "{:<20} {:>10} {:>8} {:>10} {:>14.6e} {:>12.4e} {:>12.4e}\n",
                r.name,
                r.force_evaluations,
                r.rejections,
                r.discarded_steps,
                r.max_error,
                r.min_dt.unwrap_or(f64::NAN),
                r.max_dt.unwrap_or(f64::NAN)
            );
        }
        for c in &self.checks {
            s += &format!("[{}] {}: {}\n", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail);
        }
        s
    }
}

impl Metric {
    pub fn for_problem(problem: &Problem) -> Self {
        match problem {
            Problem::Dolly(_) => Metric::DollyGroundForce,
            Problem::Bounce(_) => Metric::BounceHeight,
        }
    }
}

/// Error measure of a problem: the dolly against its fine reference run
/// (taken from `cache` when present), the bounce against its closed form.
pub struct Scorer {
    metric: Metric,
    dolly: Option<(Dolly, Interpolant)>,
    bounce: Option<BounceAnalytic>,
}

impl Scorer {
    pub fn new(problem: &Problem, cache: Option<&Path>) -> Result<Self, HarnessError> {
        let metric = Metric::for_problem(problem);
        match *problem {
            Problem::Dolly(params) => {
                let dolly = Dolly::new(params)?;
                let reference = reference_run(&reference_spec(*problem)?, cache)?;
                let interp = Interpolant::from_record(&reference, ground_force_channel(&dolly, 0))?;
                Ok(Scorer { metric, dolly: Some((dolly, interp)), bounce: None })
            }
            Problem::Bounce(params) => {
                Ok(Scorer { metric, dolly: None, bounce: Some(BounceAnalytic::new(params)?) })
            }
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn score(&self, rec: &RunRecord) -> Result<ErrorSeries, HarnessError> {
        match (self.metric, &self.dolly, &self.bounce) {
            (Metric::DollyGroundForce, Some((dolly, reference)), _) => {
                error_vs_reference(rec, reference, ground_force_channel(dolly, 0), ErrorMode::Absolute)
            }
            (Metric::BounceHeight, _, Some(exact)) => Ok(error_vs_exact(
                rec,
                |s| s.d[0],
                |t| exact.height(t),
                ErrorMode::Normalized { scale: exact.params.h0 },
            )),
            _ => Err(HarnessError::Format("metric does not match the problem".into())),
        }
    }
}

fn execute(spec: &RunSpec, scorer: &Scorer) -> Result<RunOutcome, HarnessError> {
    let rec = spec.execute()?;
    let errors = scorer.score(&rec)?;
    let summary = RunSummary {
        name: spec.name.clone(),
        integrator: spec.integrator.to_string(),
        controller: spec.controller.label().to_string(),
        force_evaluations: rec.force_evaluations,
        accepted_steps: rec.accepted_steps,
        discarded_steps: rec.discarded_steps,
        rejections: rec.rejections,
        max_error: errors.max(),
        min_dt: rec.min_dt(),
        max_dt: rec.max_dt(),
    };
    Ok(RunOutcome {
        spec: spec.clone(),
        summary,
        errors,
        dt: DtHistory::from_record(&rec),
        steps: rec.cumulative_steps().collect(),
    })
}

/// Runs every member of `exp` (the dolly reference is taken from `cache`
/// when present) and evaluates the experiment's ordering checks.
pub fn compare(exp: &Experiment, cache: Option<&Path>) -> Result<Comparison, HarnessError> {
    let scorer = Scorer::new(&exp.problem, cache)?;
    let outcomes = exp.runs.iter().map(|spec| execute(spec, &scorer)).collect::<Result<Vec<_>, _>>()?;
    let mut cmp = Comparison { experiment: exp.name, metric: exp.metric, outcomes, checks: Vec::new() };
    cmp.checks = match exp.name {
        "dolly-controllers" => dolly_controller_checks(&cmp),
        "bounce-controllers" => bounce_controller_checks(&cmp, exp)?,
        _ => integrator_checks(&cmp, exp)?,
    };
    Ok(cmp)
}

fn less(cmp: &Comparison, what: &str, a: &str, b: &str, value: impl Fn(&RunOutcome) -> f64) -> Check {
    let (x, y) = (value(cmp.outcome(a).unwrap()), value(cmp.outcome(b).unwrap()));
    Check::new(format!("{what}: {a} < {b}"), x < y, format!("{x:.6e} vs {y:.6e}"))
}

fn dolly_controller_checks(cmp: &Comparison) -> Vec<Check> {
    let err = |o: &RunOutcome| o.summary.max_error;
    let fe = |o: &RunOutcome| o.summary.force_evaluations as f64;
    let adaptive = ["curvature", "apparent-frequency", "local-error"];
    let mut out = vec![
        less(cmp, "error", "fixed-min", "curvature", err),
        less(cmp, "error", "curvature", "apparent-frequency", err),
        less(cmp, "error", "curvature", "local-error", err),
        less(cmp, "error", "apparent-frequency", "fixed-max", err),
        less(cmp, "error", "local-error", "fixed-max", err),
    ];
    for a in adaptive {
        out.push(less(cmp, "steps", a, "fixed-min", fe));
        out.push(less(cmp, "steps", "fixed-max", a, fe));
    }
    out
}

fn bounce_controller_checks(cmp: &Comparison, exp: &Experiment) -> Result<Vec<Check>, HarnessError> {
    let Problem::Bounce(params) = exp.problem else { unreachable!() };
    let t_f = BounceAnalytic::new(params)?.t_f;
    let (fixed, curv, le) =
        (cmp.outcome("fixed").unwrap(), cmp.outcome("curvature").unwrap(), cmp.outcome("local-error").unwrap());
    let ratio = curv.summary.max_error / fixed.summary.max_error;
    let mut out = vec![Check::new(
        "error: curvature <= 1e-2 x fixed",
        ratio <= BOUNCE_ERROR_FACTOR,
        format!("{:.6e} vs {:.6e} (ratio {ratio:.3e})", curv.summary.max_error, fixed.summary.max_error),
    )];
    let t_end = exp.runs[0].t_end;
    let n = 200;
    let worst = (0..=n)
        .map(|i| t_f + (t_end - t_f) * i as f64 / n as f64)
        .map(|t| (t, curv.steps_at(t), le.steps_at(t)))
        .max_by(|a, b| (a.1 as f64 / a.2 as f64).total_cmp(&(b.1 as f64 / b.2 as f64)))
        .unwrap();
    out.push(Check::new(
        "steps: curvature < local-error after the first period",
        worst.1 < worst.2,
        format!("worst at t = {:.4}: {} vs {}", worst.0, worst.1, worst.2),
    ));
    Ok(out)
}

fn integrator_checks(cmp: &Comparison, exp: &Experiment) -> Result<Vec<Check>, HarnessError> {
    let cfg = exp.problem.curvature_config()?;
    let t_end = exp.runs[0].t_end;
    let base = &cmp.outcomes[0];
    let onsets = |o: &RunOutcome| drop_onsets(&o.dt.interval_means(cfg.dt_dl(), t_end), DROP_FRACTION);
    let base_onsets = onsets(base);
    let mut out = Vec::new();
    for o in &cmp.outcomes[1..] {
        let other = onsets(o);
        out.push(Check::new(
            format!("dt drops: {} aligned with {}", o.spec.name, base.spec.name),
            onsets_aligned(&other, &base_onsets, 1),
            format!("{} vs {} drop events", other.len(), base_onsets.len()),
        ));
        let frac = ratio_fraction(&o.dt, &base.dt, t_end, 200_000, RATIO_BAND.0, RATIO_BAND.1);
        out.push(Check::new(
            format!("dt ratio: {} / {}", o.spec.name, base.spec.name),
            frac >= RATIO_COVERAGE,
            format!("within [{}, {}] over {:.2}% of the horizon", RATIO_BAND.0, RATIO_BAND.1, 100.0 * frac),
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    experiment: &'a str,
    metric: Metric,
    runs: Vec<&'a RunSummary>,
    checks: &'a [Check],
    all_passed: bool,
}

/// Writes `errors.csv`, `steps_compare.csv`, `dt_history.csv` and
/// `summary.json`. Long series keep at most `max_rows` rows per run, chosen
/// to preserve error peaks and step-size dips.
pub fn write_comparison(dir: &Path, cmp: &Comparison, max_rows: usize) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut errors = Vec::new();
    let mut steps = Vec::new();
    let mut dts = Vec::new();
    for o in &cmp.outcomes {
        let name = &o.spec.name;
        for i in peak_rows(o.errors.len(), max_rows, |i| o.errors.error[i]) {
            errors.push(vec![name.clone(), io::fmt_f64(o.errors.t[i]), io::fmt_f64(o.errors.error[i])]);
        }
        for i in peak_rows(o.steps.len(), max_rows, |i| i as f64) {
            steps.push(vec![name.clone(), io::fmt_f64(o.steps[i].0), o.steps[i].1.to_string()]);
        }
        for i in peak_rows(o.dt.len(), max_rows, |i| -o.dt.dt[i]) {
            dts.push(vec![name.clone(), io::fmt_f64(o.dt.t[i]), io::fmt_f64(o.dt.dt[i])]);
        }
    }
    io::write_rows(&dir.join("errors.csv"), &["run", "t", "error"], errors)?;
    io::write_rows(&dir.join("steps_compare.csv"), &["run", "t", "force_evaluations"], steps)?;
    io::write_rows(&dir.join("dt_history.csv"), &["run", "t", "dt"], dts)?;
    io::write_json(
        &dir.join("summary.json"),
        &SummaryFile {
            experiment: cmp.experiment,
            metric: cmp.metric,
            runs: cmp.outcomes.iter().map(|o| &o.summary).collect(),
            checks: &cmp.checks,
            all_passed: cmp.all_passed(),
        },
    )
}
