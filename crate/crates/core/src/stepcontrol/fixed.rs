use super::{StepController, StepDecision};
use crate::{Error, Result, SystemState};

/// Constant step size; never rejects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedStep {
    dt: f64,
}

impl FixedStep {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig("fixed step must be positive and finite"));
        }
        Ok(FixedStep { dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl StepController for FixedStep {
    fn label(&self) -> &'static str {
        "fixed"
    }

    fn start(&mut self, _initial: &SystemState) -> Result<f64> {
        Ok(self.dt)
    }

    fn observe(&mut self, _prev: &SystemState, _curr: &SystemState, _dt: f64) -> Result<StepDecision> {
        Ok(StepDecision::accept(self.dt))
    }

    fn dt_min(&self) -> f64 {
        self.dt
    }
}
