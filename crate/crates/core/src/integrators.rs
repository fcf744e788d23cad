//! Explicit direct time integrators and the adaptive run loop.
//!
//! All three schemes take one force evaluation per step, are second order and
//! reproduce constant-acceleration motion exactly for any step sequence.
//!
//! * Central differences, written as single-step velocity Verlet so that the
//!   step may change between steps. Forces at `t + dt` see the predicted
//!   velocity `v + dt a`.
//! * Explicit generalized-α (Hulbert–Chung), with the dissipation set by the
//!   high-frequency spectral radius `ρ_b`:
//!   `α_m = (2ρ_b − 1)/(1 + ρ_b)`, `β = (5 − 3ρ_b)/((1 + ρ_b)²(2 − ρ_b))`,
//!   `γ = 3/2 − α_m`. Forces are evaluated at the start of the step.
//! * Chung–Lee, a two-step explicit family with `β ∈ [1, 28/27]`
//!   (`β = 1` is non-dissipative). The history term is rescaled by the ratio
//!   of consecutive steps when `dt` changes.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::curvature::curvature;
use crate::record::{RunRecord, Sample};
use crate::stepcontrol::StepController;
use crate::vecops::check_len;
use crate::{Error, MechanicalSystem, Result, SystemState};

/// Upper end of the Chung–Lee `β` range.
pub const CHUNG_LEE_BETA_MAX: f64 = 28.0 / 27.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegratorKind {
    Cdm,
    EgAlpha { rho_b: f64 },
    ChungLee { beta: f64 },
}

impl IntegratorKind {
    pub fn label(&self) -> &'static str {
        match self {
            IntegratorKind::Cdm => "cdm",
            IntegratorKind::EgAlpha { .. } => "eg-alpha",
            IntegratorKind::ChungLee { .. } => "chung-lee",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegratorKind::Cdm => Ok(()),
            IntegratorKind::EgAlpha { rho_b } => {
                if (0.0..=1.0).contains(&rho_b) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig("rho_b must lie in [0, 1]"))
                }
            }
            IntegratorKind::ChungLee { beta } => {
                if (1.0..=CHUNG_LEE_BETA_MAX).contains(&beta) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig("Chung-Lee beta must lie in [1, 28/27]"))
                }
            }
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegratorKind::Cdm => write!(f, "cdm"),
            IntegratorKind::EgAlpha { rho_b } => write!(f, "eg-alpha(rho_b={rho_b})"),
            IntegratorKind::ChungLee { beta } => write!(f, "chung-lee(beta={beta})"),
        }
    }
}

/// Explicit generalized-α parameters for a given high-frequency spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgAlphaCoefficients {
    pub alpha_m: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EgAlphaCoefficients {
    pub fn from_rho_b(rho_b: f64) -> Self {
        let alpha_m = (2.0 * rho_b - 1.0) / (1.0 + rho_b);
        let beta = (5.0 - 3.0 * rho_b) / ((1.0 + rho_b) * (1.0 + rho_b) * (2.0 - rho_b));
        EgAlphaCoefficients { alpha_m, beta, gamma: 1.5 - alpha_m }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub new_state: SystemState,
    pub force_evaluations: u32,
}

fn finish(state: SystemState) -> Result<StepReport> {
    if state.is_finite() {
        Ok(StepReport { new_state: state, force_evaluations: 1 })
    } else {
        Err(Error::Diverged { t: state.t })
    }
}

fn check_step<S: MechanicalSystem + ?Sized>(sys: &S, s: &SystemState, dt: f64) -> Result<()> {
    check_len(sys.dof(), s.dof())?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidConfig("step size must be positive and finite"));
    }
    Ok(())
}

/// One central-difference step in velocity-Verlet form.
pub fn step_cdm<S: MechanicalSystem + ?Sized>(sys: &S, s: &SystemState, dt: f64) -> Result<StepReport> {
    check_step(sys, s, dt)?;
    let n = s.dof();
    let half_dt2 = 0.5 * dt * dt;
    let d: Vec<f64> = (0..n).map(|i| s.d[i] + dt * s.v[i] + half_dt2 * s.a[i]).collect();
    let v_pred: Vec<f64> = (0..n).map(|i| s.v[i] + dt * s.a[i]).collect();
    let t = s.t + dt;
    let mut a = vec![0.0; n];
    sys.acceleration(t, &d, &v_pred, &mut a);
    let v = (0..n).map(|i| s.v[i] + 0.5 * dt * (s.a[i] + a[i])).collect();
    finish(SystemState { t, d, v, a })
}

/// One explicit generalized-α step. `s.a` is the algorithmic acceleration.
pub fn step_eg_alpha<S: MechanicalSystem + ?Sized>(
    sys: &S,
    s: &SystemState,
    dt: f64,
    rho_b: f64,
) -> Result<StepReport> {
    check_step(sys, s, dt)?;
    IntegratorKind::EgAlpha { rho_b }.validate()?;
    let c = EgAlphaCoefficients::from_rho_b(rho_b);
    let n = s.dof();
    let mut rhs = vec![0.0; n];
    sys.acceleration(s.t, &s.d, &s.v, &mut rhs);
    let a: Vec<f64> = (0..n).map(|i| (rhs[i] - c.alpha_m * s.a[i]) / (1.0 - c.alpha_m)).collect();
    let dt2 = dt * dt;
    let d = (0..n)
        .map(|i| s.d[i] + dt * s.v[i] + dt2 * ((0.5 - c.beta) * s.a[i] + c.beta * a[i]))
        .collect();
    let v = (0..n).map(|i| s.v[i] + dt * ((1.0 - c.gamma) * s.a[i] + c.gamma * a[i])).collect();
    finish(SystemState { t: s.t + dt, d, v, a })
}

/// One Chung–Lee step. `history` is `(a_{n−1}, dt_{n−1})`; `None` starts the
/// scheme as if the acceleration had been constant.
pub fn step_chung_lee<S: MechanicalSystem + ?Sized>(
    sys: &S,
    s: &SystemState,
    history: Option<(&[f64], f64)>,
    dt: f64,
    beta: f64,
) -> Result<StepReport> {
    check_step(sys, s, dt)?;
    IntegratorKind::ChungLee { beta }.validate()?;
    let n = s.dof();
    // da = r (a_n − a_{n−1}) with r = dt / dt_{n−1}
    let da: Vec<f64> = match history {
        Some((prev_a, prev_dt)) => {
            check_len(n, prev_a.len())?;
            let r = dt / prev_dt;
            (0..n).map(|i| r * (s.a[i] - prev_a[i])).collect()
        }
        None => vec![0.0; n],
    };
    let dt2 = dt * dt;
    let d: Vec<f64> =
        (0..n).map(|i| s.d[i] + dt * s.v[i] + dt2 * (0.5 * s.a[i] + (beta - 0.5) * da[i])).collect();
    let v: Vec<f64> = (0..n).map(|i| s.v[i] + dt * (s.a[i] + 0.5 * da[i])).collect();
    let t = s.t + dt;
    let mut a = vec![0.0; n];
    sys.acceleration(t, &d, &v, &mut a);
    finish(SystemState { t, d, v, a })
}

/// A time integrator together with whatever history its scheme carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrator {
    kind: IntegratorKind,
    history: Option<(Vec<f64>, f64)>,
}

impl Integrator {
    pub fn new(kind: IntegratorKind) -> Result<Self> {
        kind.validate()?;
        Ok(Integrator { kind, history: None })
    }

    pub fn cdm() -> Self {
        Integrator { kind: IntegratorKind::Cdm, history: None }
    }

    pub fn eg_alpha(rho_b: f64) -> Result<Self> {
        Self::new(IntegratorKind::EgAlpha { rho_b })
    }

    pub fn chung_lee(beta: f64) -> Result<Self> {
        Self::new(IntegratorKind::ChungLee { beta })
    }

    pub fn kind(&self) -> IntegratorKind {
        self.kind
    }

    /// Forgets multi-step history.
    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn step<S: MechanicalSystem + ?Sized>(
        &mut self,
        sys: &S,
        s: &SystemState,
        dt: f64,
    ) -> Result<StepReport> {
        match self.kind {
            IntegratorKind::Cdm => step_cdm(sys, s, dt),
            IntegratorKind::EgAlpha { rho_b } => step_eg_alpha(sys, s, dt, rho_b),
            IntegratorKind::ChungLee { beta } => {
                let hist = self.history.as_ref().map(|(a, h)| (a.as_slice(), *h));
                let report = step_chung_lee(sys, s, hist, dt, beta)?;
                self.history = Some((s.a.clone(), dt));
                Ok(report)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Keep every `decimation`-th accepted step (the last one is always kept).
    pub decimation: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { decimation: 1 }
    }
}

/// A failed run and everything recorded before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: RunRecord,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} accepted steps)", self.error, self.partial.accepted_steps)
    }
}

impl core::error::Error for RunFailure {}

/// Relative slack under which a step is stretched to land on a target.
const LANDING_SLACK: f64 = 1e-9;

struct Snapshot {
    t: f64,
    integrator: Integrator,
    record_len: usize,
    accepted_steps: u64,
}

/// Integrates from `initial` to `t_end`, consulting `controller` before every
/// step and honoring its rejections.
///
/// The initial acceleration is recomputed from the model (one force
/// evaluation, counted). Steps are shortened to land exactly on `t_end` and on
/// every controller boundary.
pub fn run<S, C>(
    sys: &S,
    initial: SystemState,
    integrator: &mut Integrator,
    controller: &mut C,
    t_end: f64,
    opts: RunOptions,
) -> core::result::Result<RunRecord, Box<RunFailure>>
where
    S: MechanicalSystem + ?Sized,
    C: StepController + ?Sized,
{
    let mut rec = RunRecord {
        integrator: integrator.kind().label(),
        controller: controller.label(),
        ..RunRecord::default()
    };
    match drive(sys, initial, integrator, controller, t_end, opts, &mut rec) {
        Ok(()) => Ok(rec),
        Err(error) => Err(Box::new(RunFailure { error, partial: rec })),
    }
}

fn drive<S, C>(
    sys: &S,
    initial: SystemState,
    integrator: &mut Integrator,
    controller: &mut C,
    t_end: f64,
    opts: RunOptions,
    rec: &mut RunRecord,
) -> Result<()>
where
    S: MechanicalSystem + ?Sized,
    C: StepController + ?Sized,
{
    if !(t_end.is_finite() && t_end > initial.t) {
        return Err(Error::InvalidHorizon { t_start: initial.t, t_end });
    }
    let decimation = opts.decimation.max(1) as u64;
    integrator.reset();

    let mut state = initial;
    sys.equilibrate(&mut state)?;
    rec.force_evaluations = 1;
    let mut dt = controller.start(&state)?;
    push_sample(rec, &state, 0.0, controller.effective_k())?;

    let mut snapshot =
        Snapshot { t: state.t, integrator: integrator.clone(), record_len: rec.samples.len(), accepted_steps: 0 };

    while state.t < t_end {
        if !dt.is_finite() {
            return Err(Error::NonFinite("controller step size"));
        }
        if dt < 0.5 * controller.dt_min() || dt <= 0.0 {
            return Err(Error::StepUnderflow { t: state.t, dt, dt_min: controller.dt_min() });
        }
        let boundary = controller.next_boundary(state.t);
        let target = boundary.map_or(t_end, |b| b.min(t_end));
        let mut h = dt;
        let landing = state.t + h >= target - LANDING_SLACK * h;
        if landing {
            h = target - state.t;
        }

        let before = integrator.clone();
        let report = integrator.step(sys, &state, h)?;
        rec.force_evaluations += u64::from(report.force_evaluations);
        let mut next = report.new_state;
        if landing {
            next.t = target;
        }

        let decision = controller.observe(&state, &next, h)?;
        if decision.reject {
            rec.rejections += 1;
            let to = decision.rollback_to.ok_or(Error::MissingCheckpoint { rollback_to: f64::NAN })?;
            if to == state.t {
                *integrator = before;
                rec.discarded_steps += 1;
            } else {
                let cp = controller
                    .checkpoint()
                    .filter(|cp| cp.t == to && snapshot.t == to)
                    .ok_or(Error::MissingCheckpoint { rollback_to: to })?;
                state = cp.clone();
                *integrator = snapshot.integrator.clone();
                rec.samples.truncate(snapshot.record_len);
                rec.discarded_steps += rec.accepted_steps - snapshot.accepted_steps + 1;
                rec.accepted_steps = snapshot.accepted_steps;
            }
            dt = decision.dt;
            continue;
        }

        state = next;
        rec.accepted_steps += 1;
        if rec.accepted_steps.is_multiple_of(decimation) || state.t >= t_end {
            push_sample(rec, &state, h, controller.effective_k())?;
        }
        if landing && boundary.is_some_and(|b| b == target) {
            snapshot = Snapshot {
                t: state.t,
                integrator: integrator.clone(),
                record_len: rec.samples.len(),
                accepted_steps: rec.accepted_steps,
            };
        }
        dt = decision.dt;
    }
    Ok(())
}

fn push_sample(rec: &mut RunRecord, s: &SystemState, dt: f64, k_effective: Option<f64>) -> Result<()> {
    rec.samples.push(Sample {
        t: s.t,
        d: s.d.clone(),
        v: s.v.clone(),
        a: s.a.clone(),
        dt,
        k_raw: curvature(&s.v, &s.a)?,
        k_effective,
        force_evaluations: rec.force_evaluations,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepcontrol::FixedStep;

    /// Constant acceleration per DOF, independent of state.
    struct Constant(Vec<f64>, Vec<f64>);

    impl MechanicalSystem for Constant {
        fn dof(&self) -> usize {
            self.0.len()
        }
        fn mass_diagonal(&self) -> &[f64] {
            &self.1
        }
        fn acceleration(&self, _t: f64, _d: &[f64], _v: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&self.0);
        }
    }

    fn free() -> Constant {
        Constant(vec![0.0], vec![1.0])
    }

    #[test]
    fn free_particle_cdm() {
        let s = SystemState::new(0.0, vec![0.0], vec![1.0], vec![0.0]).unwrap();
        let r = step_cdm(&free(), &s, 0.5).unwrap();
        assert_eq!(r.new_state.d, vec![0.5]);
        assert_eq!(r.new_state.v, vec![1.0]);
        assert_eq!(r.force_evaluations, 1);
    }

    #[test]
    fn free_particle_is_integrator_independent() {
        let s = SystemState::new(0.0, vec![0.0], vec![1.0], vec![0.0]).unwrap();
        let cdm = step_cdm(&free(), &s, 0.5).unwrap().new_state;
        let eg = step_eg_alpha(&free(), &s, 0.5, 1.0).unwrap().new_state;
        let cl = step_chung_lee(&free(), &s, None, 0.5, 1.0).unwrap().new_state;
        assert_eq!(cdm, eg);
        assert_eq!(cdm, cl);
    }

    #[test]
    fn eg_alpha_coefficients() {
        let c = EgAlphaCoefficients::from_rho_b(1.0);
        assert_eq!((c.alpha_m, c.beta, c.gamma), (0.5, 0.5, 1.0));
        let c = EgAlphaCoefficients::from_rho_b(0.0);
        assert_eq!((c.alpha_m, c.beta, c.gamma), (-1.0, 2.5, 2.5));
    }

    #[test]
    fn parameter_validation() {
        assert!(Integrator::eg_alpha(1.2).is_err());
        assert!(Integrator::chung_lee(0.9).is_err());
        assert!(Integrator::chung_lee(CHUNG_LEE_BETA_MAX).is_ok());
    }

    #[test]
    fn fixed_run_takes_exactly_n_steps() {
        let sys = Constant(vec![-10.0], vec![1.0]);
        let s0 = SystemState::at_rest(0.0, vec![1.0]).unwrap();
        let mut ctrl = FixedStep::new(1e-3).unwrap();
        let rec = run(&sys, s0, &mut Integrator::cdm(), &mut ctrl, 0.25, RunOptions::default()).unwrap();
        assert_eq!(rec.accepted_steps, 250);
        assert_eq!(rec.force_evaluations, 251);
        assert_eq!(rec.last().unwrap().t, 0.25);
    }

    #[test]
    fn decimation_keeps_last_sample() {
        let sys = Constant(vec![-10.0], vec![1.0]);
        let s0 = SystemState::at_rest(0.0, vec![1.0]).unwrap();
        let mut ctrl = FixedStep::new(1e-3).unwrap();
        let opts = RunOptions { decimation: 7 };
        let rec = run(&sys, s0, &mut Integrator::cdm(), &mut ctrl, 0.1, opts).unwrap();
        assert_eq!(rec.samples.len(), 1 + 100 / 7 + 1);
        assert_eq!(rec.last().unwrap().t, 0.1);
    }

    #[test]
    fn bad_horizon() {
        let s0 = SystemState::at_rest(1.0, vec![1.0]).unwrap();
        let mut ctrl = FixedStep::new(1e-3).unwrap();
        let err = run(&free(), s0, &mut Integrator::cdm(), &mut ctrl, 0.5, RunOptions::default()).unwrap_err();
        assert_eq!(err.error, Error::InvalidHorizon { t_start: 1.0, t_end: 0.5 });
    }

    struct Blowup;
    impl MechanicalSystem for Blowup {
        fn dof(&self) -> usize {
            1
        }
        fn mass_diagonal(&self) -> &[f64] {
            &[1.0]
        }
        fn acceleration(&self, t: f64, _d: &[f64], _v: &[f64], out: &mut [f64]) {
            out[0] = if t > 0.05 { f64::INFINITY } else { 0.0 };
        }
    }

    #[test]
    fn divergence_keeps_partial_record() {
        let s0 = SystemState::at_rest(0.0, vec![0.0]).unwrap();
        let mut ctrl = FixedStep::new(0.01).unwrap();
        let err = run(&Blowup, s0, &mut Integrator::cdm(), &mut ctrl, 1.0, RunOptions::default()).unwrap_err();
        assert!(matches!(err.error, Error::Diverged { .. }));
        assert_eq!(err.partial.accepted_steps, 5);
    }
}
