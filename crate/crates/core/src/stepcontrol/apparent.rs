use super::{DtBounds, StepController, StepDecision};
use crate::vecops::{check_len, dist};
use crate::{Error, Result, SystemState};

pub const DEFAULT_SAFETY: f64 = 0.9;

/// Step bound from the apparent frequency `ω = sqrt(|Δa| / |Δd|)` measured
/// over one step: `dt = clamp(safety · 2 / ω)`.
///
/// With no displacement increment, or no acceleration increment, the motion
/// looks inertial and `dt_max` is returned.
pub fn apparent_frequency_dt(
    prev: &SystemState,
    curr: &SystemState,
    safety: f64,
    bounds: DtBounds,
) -> Result<f64> {
    check_len(prev.dof(), curr.dof())?;
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidConfig("safety factor must lie in (0, 1]"));
    }
    let dd = dist(&curr.d, &prev.d);
    let da = dist(&curr.a, &prev.a);
    if dd == 0.0 || da == 0.0 {
        return Ok(bounds.max);
    }
    let omega = libm::sqrt(da / dd);
    let dt = safety * 2.0 / omega;
    if dt.is_nan() {
        return Err(Error::NonFinite("apparent frequency"));
    }
    Ok(bounds.clamp(dt))
}

/// Apparent-frequency controller. Never rejects; the first step uses `dt_min`.
#[derive(Debug, Clone)]
pub struct ApparentFrequency {
    pub bounds: DtBounds,
    pub safety: f64,
}

impl ApparentFrequency {
    pub fn new(bounds: DtBounds, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::InvalidConfig("safety factor must lie in (0, 1]"));
        }
        Ok(ApparentFrequency { bounds, safety })
    }
}

impl StepController for ApparentFrequency {
    fn label(&self) -> &'static str {
        "apparent-frequency"
    }

    fn start(&mut self, _initial: &SystemState) -> Result<f64> {
        Ok(self.bounds.min)
    }

    fn observe(&mut self, prev: &SystemState, curr: &SystemState, _dt: f64) -> Result<StepDecision> {
        apparent_frequency_dt(prev, curr, self.safety, self.bounds).map(StepDecision::accept)
    }

    fn dt_min(&self) -> f64 {
        self.bounds.min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn st(d: f64, a: f64) -> SystemState {
        SystemState::new(0.0, vec![d, 2.0 * d], vec![0.0, 0.0], vec![a, 2.0 * a]).unwrap()
    }

    #[test]
    fn harmonic_motion_recovers_frequency() {
        // a = -ω² d with ω = 50 ⇒ Δa = -ω² Δd
        let omega: f64 = 50.0;
        let bounds = DtBounds::new(1e-6, 1.0).unwrap();
        let prev = st(0.01, -omega * omega * 0.01);
        let curr = st(0.012, -omega * omega * 0.012);
        let dt = apparent_frequency_dt(&prev, &curr, 0.9, bounds).unwrap();
        assert!((dt - 0.9 * 2.0 / omega).abs() < 1e-14);
    }

    #[test]
    fn inertial_motion_gives_dt_max() {
        let bounds = DtBounds::new(1e-6, 1e-2).unwrap();
        let dt = apparent_frequency_dt(&st(0.0, 3.0), &st(0.5, 3.0), 0.9, bounds).unwrap();
        assert_eq!(dt, 1e-2);
        // no displacement increment: degenerate, also dt_max
        let dt = apparent_frequency_dt(&st(0.5, 3.0), &st(0.5, 4.0), 0.9, bounds).unwrap();
        assert_eq!(dt, 1e-2);
    }

    #[test]
    fn result_is_clamped() {
        let bounds = DtBounds::new(1e-3, 1e-2).unwrap();
        let dt = apparent_frequency_dt(&st(0.0, 0.0), &st(1e-9, 1e6), 0.9, bounds).unwrap();
        assert_eq!(dt, 1e-3);
    }

    #[test]
    fn rejects_bad_safety() {
        let bounds = DtBounds::new(1e-3, 1e-2).unwrap();
        assert!(ApparentFrequency::new(bounds, 0.0).is_err());
        assert!(ApparentFrequency::new(bounds, 1.5).is_err());
    }
}
