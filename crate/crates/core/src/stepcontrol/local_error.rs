//! Local-error band control for central-difference stepping.
//!
//! The Newmark local error `(β − 1/6) Δt² (a_{n+1} − a_n)` specialized to
//! `β = 0` has magnitude `Δt² |Δa| / 6`. It is measured relative to the
//! displacement norm and kept inside `[tol_low, tol_high]`; being third order
//! in `Δt`, corrections use a cube root.

use super::{DtBounds, StepController, StepDecision};
use crate::vecops::{check_len, dist, norm};
use crate::{Error, Result, SystemState};

/// Default band for the relative local error.
pub const DEFAULT_TOL_LOW: f64 = 1e-4;
pub const DEFAULT_TOL_HIGH: f64 = 1e-3;

/// Floor of the displacement norm in the relative error measure.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Upper bound on the shrink factor after a rejection, so repeated rejections
/// make geometric progress toward `dt_min`.
const MAX_REJECT_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalErrorConfig {
    pub bounds: DtBounds,
    pub tol_low: f64,
    pub tol_high: f64,
}

impl LocalErrorConfig {
    pub fn new(bounds: DtBounds, tol_low: f64, tol_high: f64) -> Result<Self> {
        if !(tol_low.is_finite() && tol_high.is_finite()) {
            return Err(Error::NonFinite("local error tolerances"));
        }
        if !(tol_low > 0.0 && tol_low < tol_high) {
            return Err(Error::InvalidConfig("local error band needs 0 < tol_low < tol_high"));
        }
        Ok(LocalErrorConfig { bounds, tol_low, tol_high })
    }
}

/// Judges one step of size `dt` that started at `step_start`.
///
/// Steps already at `dt_min` are never rejected.
#[allow(clippy::too_many_arguments)]
pub fn local_error_dt(
    prev_a: &[f64],
    curr_a: &[f64],
    curr_d: &[f64],
    dt: f64,
    step_start: f64,
    tol_low: f64,
    tol_high: f64,
    bounds: DtBounds,
) -> Result<StepDecision> {
    check_len(prev_a.len(), curr_a.len())?;
    check_len(prev_a.len(), curr_d.len())?;
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("step size must be positive"));
    }
    if !(tol_low > 0.0 && tol_low < tol_high) {
        return Err(Error::InvalidConfig("local error band needs 0 < tol_low < tol_high"));
    }
    let eta = relative_local_error(prev_a, curr_a, curr_d, dt);
    if !eta.is_finite() {
        return Err(Error::NonFinite("local error"));
    }
    let ratio = if eta > 0.0 { libm::cbrt(tol_high / eta) } else { f64::INFINITY };

    if eta > tol_high && dt > bounds.min * (1.0 + 1e-12) {
        let dt_new = (dt * ratio.min(MAX_REJECT_FACTOR)).max(bounds.min);
        Ok(StepDecision::reject(dt_new, step_start))
    } else if eta < tol_low {
        Ok(StepDecision::accept((dt * ratio).min(bounds.max).max(bounds.min)))
    } else {
        Ok(StepDecision::accept(bounds.clamp(dt)))
    }
}

/// `Δt² |a_{n+1} − a_n| / 6` divided by `max(|d_{n+1}|, floor)`.
pub(crate) fn relative_local_error(prev_a: &[f64], curr_a: &[f64], curr_d: &[f64], dt: f64) -> f64 {
    let e = dt * dt * dist(curr_a, prev_a) / 6.0;
    e / norm(curr_d).max(RELATIVE_FLOOR)
}

/// Local-error controller. The first step uses `dt_min`.
#[derive(Debug, Clone)]
pub struct LocalError {
    pub cfg: LocalErrorConfig,
    rejections: usize,
    last_eta: f64,
}

impl LocalError {
    pub fn new(cfg: LocalErrorConfig) -> Self {
        LocalError { cfg, rejections: 0, last_eta: 0.0 }
    }

    /// Relative error measure of the last judged step.
    pub fn last_eta(&self) -> f64 {
        self.last_eta
    }
}

impl StepController for LocalError {
    fn label(&self) -> &'static str {
        "local-error"
    }

    fn start(&mut self, _initial: &SystemState) -> Result<f64> {
        self.rejections = 0;
        self.last_eta = 0.0;
        Ok(self.cfg.bounds.min)
    }

    fn observe(&mut self, prev: &SystemState, curr: &SystemState, dt: f64) -> Result<StepDecision> {
        let c = &self.cfg;
        self.last_eta = relative_local_error(&prev.a, &curr.a, &curr.d, dt);
        let d = local_error_dt(&prev.a, &curr.a, &curr.d, dt, prev.t, c.tol_low, c.tol_high, c.bounds)?;
        if d.reject {
            self.rejections += 1;
        }
        Ok(d)
    }

    fn effective_k(&self) -> Option<f64> {
        Some(self.last_eta)
    }

    fn dt_min(&self) -> f64 {
        self.cfg.bounds.min
    }

    fn rejections(&self) -> usize {
        self.rejections
    }
}
