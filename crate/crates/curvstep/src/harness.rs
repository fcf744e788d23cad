//! Problems, run specifications, reference solutions and error measures.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use curvstep_core::integrators::CHUNG_LEE_BETA_MAX;
use curvstep_core::models::{Bounce, BounceAnalytic, BounceParams, Dolly, DollyParams};
use curvstep_core::stepcontrol::{
    ApparentFrequency, CurvatureController, CurvatureControllerConfig, DtBounds, FixedStep,
    LocalError, LocalErrorConfig, StepController, DEFAULT_SAFETY, DEFAULT_TOL_HIGH,
    DEFAULT_TOL_LOW,
};
use curvstep_core::{
    run, Integrator, IntegratorKind, MechanicalSystem, RunFailure, RunOptions, RunRecord, Sample,
    SystemState,
};

use crate::io;
use crate::HarnessError;

pub const DOLLY_DT_MIN: f64 = 2.9412e-5;
pub const DOLLY_DT_MAX: f64 = 2.5e-3;
pub const DOLLY_T_END: f64 = 0.25;
pub const DOLLY_B: f64 = 0.005;
pub const DOLLY_ZETA: f64 = 1.0;
pub const DOLLY_REFERENCE_DT: f64 = 1e-6;

pub const BOUNCE_B: f64 = 0.444;
pub const BOUNCE_ZETA: f64 = 10.0;
pub const BOUNCE_PERIODS: f64 = 3.0;
/// Fixed comparison step as a fraction of the critical step.
pub const BOUNCE_FIXED_FRACTION: f64 = 0.1;
pub const BOUNCE_REFERENCE_DT: f64 = 1e-7;

pub const DEFAULT_RHO_B: f64 = 0.8;
pub const DEFAULT_CHUNG_LEE_BETA: f64 = CHUNG_LEE_BETA_MAX;

/// Environment variable overriding the reference cache directory.
pub const CACHE_ENV: &str = "CURVSTEP_CACHE_DIR";

type CoreResult<T> = curvstep_core::Result<T>;

#[derive(Debug, Clone)]
pub enum Model {
    Dolly(Dolly),
    Bounce(Bounce),
}

impl Model {
    pub fn initial_state(&self) -> SystemState {
        match self {
            Model::Dolly(m) => m.initial_state(),
            Model::Bounce(m) => m.initial_state(),
        }
    }
}

impl MechanicalSystem for Model {
    fn dof(&self) -> usize {
        match self {
            Model::Dolly(m) => m.dof(),
            Model::Bounce(m) => m.dof(),
        }
    }

    fn mass_diagonal(&self) -> &[f64] {
        match self {
            Model::Dolly(m) => m.mass_diagonal(),
            Model::Bounce(m) => m.mass_diagonal(),
        }
    }

    fn acceleration(&self, t: f64, d: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Model::Dolly(m) => m.acceleration(t, d, v, out),
            Model::Bounce(m) => m.acceleration(t, d, v, out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    Dolly(DollyParams),
    Bounce(BounceParams),
}

impl Problem {
    pub fn dolly() -> Self {
        Problem::Dolly(DollyParams::default())
    }

    pub fn bounce() -> Self {
        Problem::Bounce(BounceParams::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Dolly(_) => "dolly",
            Problem::Bounce(_) => "bounce",
        }
    }

    pub fn model(&self) -> CoreResult<Model> {
        Ok(match self {
            Problem::Dolly(p) => Model::Dolly(Dolly::new(*p)?),
            Problem::Bounce(p) => Model::Bounce(Bounce::new(*p)?),
        })
    }

    /// Default horizon: the dolly transient, or three bounce periods.
    pub fn t_end(&self) -> CoreResult<f64> {
        match self {
            Problem::Dolly(_) => Ok(DOLLY_T_END),
            Problem::Bounce(p) => Ok(BOUNCE_PERIODS * BounceAnalytic::new(*p)?.t_f),
        }
    }

    pub fn bounds(&self) -> CoreResult<DtBounds> {
        match self {
            Problem::Dolly(_) => DtBounds::new(DOLLY_DT_MIN, DOLLY_DT_MAX),
            Problem::Bounce(p) => DtBounds::from_critical(p.dt_crit),
        }
    }

    /// `(b, ζ)` used for this problem's curvature runs.
    pub fn curvature_params(&self) -> (f64, f64) {
        match self {
            Problem::Dolly(_) => (DOLLY_B, DOLLY_ZETA),
            Problem::Bounce(_) => (BOUNCE_B, BOUNCE_ZETA),
        }
    }

    pub fn curvature_config(&self) -> CoreResult<CurvatureControllerConfig> {
        let bounds = self.bounds()?;
        let (b, zeta) = self.curvature_params();
        CurvatureControllerConfig::new(b, bounds.min, bounds.max, zeta)
    }

    pub fn reference_dt(&self) -> f64 {
        match self {
            Problem::Dolly(_) => DOLLY_REFERENCE_DT,
            Problem::Bounce(_) => BOUNCE_REFERENCE_DT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Fixed { dt: f64 },
    Curvature(CurvatureControllerConfig),
    ApparentFrequency { bounds: DtBounds, safety: f64 },
    LocalError(LocalErrorConfig),
}

impl ControllerSpec {
    pub fn apparent_frequency(bounds: DtBounds) -> Self {
        ControllerSpec::ApparentFrequency { bounds, safety: DEFAULT_SAFETY }
    }

    pub fn local_error(bounds: DtBounds) -> CoreResult<Self> {
        Ok(ControllerSpec::LocalError(LocalErrorConfig::new(bounds, DEFAULT_TOL_LOW, DEFAULT_TOL_HIGH)?))
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControllerSpec::Fixed { .. } => "fixed",
            ControllerSpec::Curvature(_) => "curvature",
            ControllerSpec::ApparentFrequency { .. } => "apparent-frequency",
            ControllerSpec::LocalError(_) => "local-error",
        }
    }

    pub fn build(&self) -> CoreResult<Box<dyn StepController>> {
        Ok(match *self {
            ControllerSpec::Fixed { dt } => Box::new(FixedStep::new(dt)?),
            ControllerSpec::Curvature(cfg) => Box::new(CurvatureController::new(cfg)?),
            ControllerSpec::ApparentFrequency { bounds, safety } => {
                Box::new(ApparentFrequency::new(bounds, safety)?)
            }
            ControllerSpec::LocalError(cfg) => Box::new(LocalError::new(cfg)),
        })
    }
}

/// A fully parameterized run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub problem: Problem,
    pub integrator: IntegratorKind,
    pub controller: ControllerSpec,
    pub t_end: f64,
    pub decimation: usize,
}

impl RunSpec {
    /// CDM over the problem's default horizon.
    pub fn new(name: impl Into<String>, problem: Problem, controller: ControllerSpec) -> CoreResult<Self> {
        Ok(RunSpec {
            name: name.into(),
            problem,
            integrator: IntegratorKind::Cdm,
            controller,
            t_end: problem.t_end()?,
            decimation: 1,
        })
    }

    pub fn with_integrator(mut self, integrator: IntegratorKind) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn execute(&self) -> Result<RunRecord, Box<RunFailure>> {
        let setup = || -> CoreResult<_> {
            Ok((self.problem.model()?, Integrator::new(self.integrator)?, self.controller.build()?))
        };
        let (model, mut integrator, mut controller) = setup()
            .map_err(|error| Box::new(RunFailure { error, partial: RunRecord::default() }))?;
        run(
            &model,
            model.initial_state(),
            &mut integrator,
            controller.as_mut(),
            self.t_end,
            RunOptions { decimation: self.decimation },
        )
    }

    /// Content hash of everything that affects the numbers (the name does not).
    pub fn fingerprint(&self) -> String {
        let key = format!(
            "v1|{:?}|{:?}|{:?}|{:?}|{}",
            self.problem, self.integrator, self.controller, self.t_end, self.decimation
        );
        Sha256::digest(key.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fine fixed-step CDM run over the default horizon.
pub fn reference_spec(problem: Problem) -> CoreResult<RunSpec> {
    RunSpec::new(
        format!("{}-reference", problem.name()),
        problem,
        ControllerSpec::Fixed { dt: problem.reference_dt() },
    )
}

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()).map(PathBuf::from)
}

pub fn cache_path(dir: &Path, spec: &RunSpec) -> PathBuf {
    dir.join(format!("{}.runrecord", spec.fingerprint()))
}

/// Runs `spec`, or loads it from `cache` when a record with the same
/// fingerprint exists. Fresh results are stored atomically.
pub fn reference_run(spec: &RunSpec, cache: Option<&Path>) -> Result<RunRecord, HarnessError> {
    if let Some(dir) = cache {
        let path = cache_path(dir, spec);
        if path.is_file() {
            return io::read_record(&path);
        }
        let rec = spec.execute()?;
        std::fs::create_dir_all(dir)?;
        io::write_record(&path, &rec)?;
        return Ok(rec);
    }
    Ok(spec.execute()?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorMode {
    Absolute,
    /// `|e| / max(|exact|, floor)`
    Relative { floor: f64 },
    /// `|e| / scale`
    Normalized { scale: f64 },
}

impl ErrorMode {
    fn apply(&self, value: f64, exact: f64) -> f64 {
        let e = (value - exact).abs();
        match *self {
            ErrorMode::Absolute => e,
            ErrorMode::Relative { floor } => e / exact.abs().max(floor),
            ErrorMode::Normalized { scale } => e / scale,
        }
    }
}

/// Error of one channel at every recorded instant of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub t: Vec<f64>,
    pub error: Vec<f64>,
}

impl ErrorSeries {
    pub fn max(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Piecewise-linear interpolant through `(t, y)` pairs sorted by `t`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl Interpolant {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self, HarnessError> {
        if t.is_empty() || t.len() != y.len() {
            return Err(HarnessError::Format("interpolant needs matching, nonempty series".into()));
        }
        if t.windows(2).any(|w| w[1] < w[0]) {
            return Err(HarnessError::Format("interpolant times must be sorted".into()));
        }
        Ok(Interpolant { t, y })
    }

    pub fn from_record<F: Fn(&Sample) -> f64>(rec: &RunRecord, channel: F) -> Result<Self, HarnessError> {
        Self::new(rec.samples.iter().map(|s| s.t).collect(), rec.samples.iter().map(channel).collect())
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// `None` outside the sampled span.
    pub fn at(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.span();
        let slack = 1e-12 * hi.abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return None;
        }
        let i = self.t.partition_point(|&x| x < t);
        if i == 0 {
            return Some(self.y[0]);
        }
        if i == self.t.len() {
            return Some(self.y[i - 1]);
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        if t1 == t0 {
            return Some(self.y[i]);
        }
        let w = (t - t0) / (t1 - t0);
        Some(self.y[i - 1] + w * (self.y[i] - self.y[i - 1]))
    }
}

/// Error of `channel` at every sample of `run` against a reference run,
/// interpolated linearly to the sample instants.
pub fn error_vs_reference<F: Fn(&Sample) -> f64>(
    run: &RunRecord,
    reference: &Interpolant,
    channel: F,
    mode: ErrorMode,
) -> Result<ErrorSeries, HarnessError> {
    let mut out = ErrorSeries::default();
    for s in &run.samples {
        let exact = reference
            .at(s.t)
            .ok_or_else(|| HarnessError::Format(format!("reference does not cover t = {}", s.t)))?;
        out.t.push(s.t);
        out.error.push(mode.apply(channel(s), exact));
    }
    Ok(out)
}

/// Error of `channel` at every sample of `run` against a closed form.
pub fn error_vs_exact<F, G>(run: &RunRecord, channel: F, exact: G, mode: ErrorMode) -> ErrorSeries
where
    F: Fn(&Sample) -> f64,
    G: Fn(f64) -> f64,
{
    ErrorSeries {
        t: run.samples.iter().map(|s| s.t).collect(),
        error: run.samples.iter().map(|s| mode.apply(channel(s), exact(s.t))).collect(),
    }
}

/// Ground-spring force under `wheel` (0-based), `k(d) d`.
pub fn ground_force_channel(dolly: &Dolly, wheel: usize) -> impl Fn(&Sample) -> f64 + '_ {
    move |s: &Sample| dolly.ground_force(wheel, s.d[wheel])
}

/// `(t, FK)` for the ground spring under `wheel`: wheel 0 gives FK₅, wheel 3 FK₈.
pub fn force_channel_dolly(run: &RunRecord, dolly: &Dolly, wheel: usize) -> Vec<(f64, f64)> {
    let f = ground_force_channel(dolly, wheel);
    run.samples.iter().map(|s| (s.t, f(s))).collect()
}

/// A wheel leaving (`lift`) or regaining contact with the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub wheel: usize,
    pub t: f64,
    pub lift: bool,
}

/// Sign changes of a wheel displacement, located by linear interpolation.
pub fn contact_events(run: &RunRecord, wheel: usize) -> Vec<ContactEvent> {
    let mut out = Vec::new();
    for w in run.samples.windows(2) {
        let (d0, d1) = (w[0].d[wheel], w[1].d[wheel]);
        let (up0, up1) = (d0 > 0.0, d1 > 0.0);
        if up0 != up1 {
            let t = if d1 != d0 { w[0].t + (w[1].t - w[0].t) * (-d0) / (d1 - d0) } else { w[1].t };
            out.push(ContactEvent { wheel, t, lift: up1 });
        }
    }
    out
}
