//! Step-size controllers behind a single contract.
//!
//! A controller proposes the first step in [`StepController::start`] and, after
//! every step, judges it in [`StepController::observe`]. The judgement either
//! accepts and proposes the next `dt`, or rejects and names the time to roll
//! back to: the start of the step just taken, or the start of the current
//! sub-interval for controllers that expose [`StepController::checkpoint`].

mod apparent;
mod curvature;
mod fixed;
mod local_error;

pub use apparent::{apparent_frequency_dt, ApparentFrequency, DEFAULT_SAFETY};
pub use curvature::{
    combine_interval_max, dt_from_curvature, CurvatureController, CurvatureControllerConfig,
    CurvatureFilter, FilterCheckpoint, Finalized,
};
pub use fixed::FixedStep;
pub use local_error::{
    local_error_dt, LocalError, LocalErrorConfig, DEFAULT_TOL_HIGH, DEFAULT_TOL_LOW, RELATIVE_FLOOR,
};

use crate::{Error, Result, SystemState};

/// Outcome of judging one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    /// Step size for the next step (or for the re-integration after a rejection).
    pub dt: f64,
    pub reject: bool,
    /// Time to restore from; present iff `reject`.
    pub rollback_to: Option<f64>,
}

impl StepDecision {
    pub fn accept(dt: f64) -> Self {
        StepDecision { dt, reject: false, rollback_to: None }
    }

    pub fn reject(dt: f64, rollback_to: f64) -> Self {
        StepDecision { dt, reject: true, rollback_to: Some(rollback_to) }
    }
}

/// Lower and upper step-size limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtBounds {
    pub min: f64,
    pub max: f64,
}

impl DtBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite("dt bounds"));
        }
        if !(min > 0.0 && min < max) {
            return Err(Error::InvalidConfig("dt bounds need 0 < dt_min < dt_max"));
        }
        Ok(DtBounds { min, max })
    }

    /// `dt_min = dt_crit / 100`, `dt_max = 0.85 dt_crit`.
    pub fn from_critical(dt_crit: f64) -> Result<Self> {
        Self::new(dt_crit / 100.0, 0.85 * dt_crit)
    }

    pub fn clamp(&self, dt: f64) -> f64 {
        dt.max(self.min).min(self.max)
    }
}

/// Step-size control contract shared by every strategy.
///
/// Controllers are stateful and belong to a single run.
pub trait StepController {
    fn label(&self) -> &'static str;

    /// Resets internal state for a run starting at `initial`, whose
    /// acceleration is already consistent with the model. Returns the first `dt`.
    fn start(&mut self, initial: &SystemState) -> Result<f64>;

    /// Judges the step `prev → curr` that was taken with `dt`.
    fn observe(&mut self, prev: &SystemState, curr: &SystemState, dt: f64) -> Result<StepDecision>;

    /// First instant strictly after `t` on which a step must land exactly.
    fn next_boundary(&self, _t: f64) -> Option<f64> {
        None
    }

    /// State to resume from when a rejection rolls back past the previous step.
    fn checkpoint(&self) -> Option<&SystemState> {
        None
    }

    /// Regularized refinement signal currently driving `dt`, if the controller has one.
    fn effective_k(&self) -> Option<f64> {
        None
    }

    /// Smallest step the controller will ever ask for.
    fn dt_min(&self) -> f64;

    /// Number of rejections issued since `start`.
    fn rejections(&self) -> usize {
        0
    }
}

impl<C: StepController + ?Sized> StepController for &mut C {
    fn label(&self) -> &'static str {
        (**self).label()
    }
    fn start(&mut self, initial: &SystemState) -> Result<f64> {
        (**self).start(initial)
    }
    fn observe(&mut self, prev: &SystemState, curr: &SystemState, dt: f64) -> Result<StepDecision> {
        (**self).observe(prev, curr, dt)
    }
    fn next_boundary(&self, t: f64) -> Option<f64> {
        (**self).next_boundary(t)
    }
    fn checkpoint(&self) -> Option<&SystemState> {
        (**self).checkpoint()
    }
    fn effective_k(&self) -> Option<f64> {
        (**self).effective_k()
    }
    fn dt_min(&self) -> f64 {
        (**self).dt_min()
    }
    fn rejections(&self) -> usize {
        (**self).rejections()
    }
}

impl<C: StepController + ?Sized> StepController for alloc::boxed::Box<C> {
    fn label(&self) -> &'static str {
        (**self).label()
    }
    fn start(&mut self, initial: &SystemState) -> Result<f64> {
        (**self).start(initial)
    }
    fn observe(&mut self, prev: &SystemState, curr: &SystemState, dt: f64) -> Result<StepDecision> {
        (**self).observe(prev, curr, dt)
    }
    fn next_boundary(&self, t: f64) -> Option<f64> {
        (**self).next_boundary(t)
    }
    fn checkpoint(&self) -> Option<&SystemState> {
        (**self).checkpoint()
    }
    fn effective_k(&self) -> Option<f64> {
        (**self).effective_k()
    }
    fn dt_min(&self) -> f64 {
        (**self).dt_min()
    }
    fn rejections(&self) -> usize {
        (**self).rejections()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_from_critical_step() {
        let b = DtBounds::from_critical(2e-5).unwrap();
        assert!((b.min - 2e-7).abs() < 1e-22);
        assert!((b.max - 1.7e-5).abs() < 1e-20);
    }

    #[test]
    fn bounds_validation() {
        assert!(DtBounds::new(1.0, 1.0).is_err());
        assert!(DtBounds::new(0.0, 1.0).is_err());
        assert!(DtBounds::new(1e-3, f64::NAN).is_err());
    }
}
