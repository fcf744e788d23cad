use alloc::vec::Vec;

use crate::vecops::{all_finite, check_len};
use crate::{Error, Result};

/// Kinematic state at time `t`: displacement, velocity and acceleration per DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl SystemState {
    /// Builds a state, checking that all vectors share one nonzero length and are finite.
    pub fn new(t: f64, d: Vec<f64>, v: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidConfig("state needs at least one DOF"));
        }
        check_len(d.len(), v.len())?;
        check_len(d.len(), a.len())?;
        let s = SystemState { t, d, v, a };
        if !s.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        Ok(s)
    }

    /// State at rest with zero acceleration.
    pub fn at_rest(t: f64, d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        Self::new(t, d, alloc::vec![0.0; n], alloc::vec![0.0; n])
    }

    pub fn dof(&self) -> usize {
        self.d.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && all_finite(&self.d) && all_finite(&self.v) && all_finite(&self.a)
    }
}

/// A space-discrete mechanical model `M a + f_int(d, v) = f_ext(t)` with diagonal `M`.
///
/// Implementations must be deterministic: the same `(t, d, v)` always yields
/// the same acceleration.
pub trait MechanicalSystem {
    fn dof(&self) -> usize;

    fn mass_diagonal(&self) -> &[f64];

    /// Writes `M⁻¹ (f_ext(t) − f_int(d, v))` into `out`. One call is one solving step.
    fn acceleration(&self, t: f64, d: &[f64], v: &[f64], out: &mut [f64]);

    /// Recomputes `state.a` from its displacement and velocity.
    fn equilibrate(&self, state: &mut SystemState) -> Result<()> {
        check_len(self.dof(), state.dof())?;
        let mut a = core::mem::take(&mut state.a);
        self.acceleration(state.t, &state.d, &state.v, &mut a);
        state.a = a;
        if all_finite(&state.a) {
            Ok(())
        } else {
            Err(Error::Diverged { t: state.t })
        }
    }
}

impl<S: MechanicalSystem + ?Sized> MechanicalSystem for &S {
    fn dof(&self) -> usize {
        (**self).dof()
    }
    fn mass_diagonal(&self) -> &[f64] {
        (**self).mass_diagonal()
    }
    fn acceleration(&self, t: f64, d: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).acceleration(t, d, v, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_ragged_vectors() {
        let err = SystemState::new(0.0, vec![0.0; 2], vec![0.0; 3], vec![0.0; 2]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(SystemState::new(0.0, vec![], vec![], vec![]).is_err());
        let err = SystemState::new(0.0, vec![f64::NAN], vec![0.0], vec![0.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite("state"));
    }
}
