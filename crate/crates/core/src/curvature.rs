//! First Frenet curvature of the displacement history curve `τ(t) = (t, d(t))`.
//!
//! With `τ' = (1, v)` and `τ'' = (0, a)` the curvature is
//!
//! ```text
//! k = sqrt( ((1 + v·v)(a·a) − (v·a)²) / (1 + v·v)³ )
//! ```
//!
//! The numerator is evaluated as `(a·a)(1 + |v⊥|²)`, where `v⊥` is the part of
//! `v` orthogonal to `a`. The two forms are identical algebraically, but the
//! second never cancels, so it cannot go negative and reduces bit-for-bit to
//! `|a| / (1 + v²)^{3/2}` for one DOF.

use crate::vecops::{all_finite, check_len};
use crate::{Error, Result};

/// Relative threshold below which a negative radicand is treated as round-off.
pub const RADICAND_ROUNDOFF: f64 = 1e-14;

/// A curvature value observed at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub t: f64,
    pub k: f64,
}

impl CurvatureSample {
    pub fn new(t: f64, k: f64) -> Result<Self> {
        if !t.is_finite() || !k.is_finite() {
            return Err(Error::NonFinite("curvature sample"));
        }
        if k < 0.0 {
            return Err(Error::NegativeCurvature(k));
        }
        Ok(CurvatureSample { t, k })
    }
}

/// Curvature of the multi-DOF displacement history from velocity and acceleration.
pub fn curvature(v: &[f64], a: &[f64]) -> Result<f64> {
    check_len(v.len(), a.len())?;
    if v.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    if !all_finite(v) || !all_finite(a) {
        return Err(Error::NonFinite("curvature input"));
    }

    let a_norm = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());
    if a_norm == 0.0 {
        return Ok(0.0);
    }
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let along: f64 = v.iter().zip(a).map(|(vi, ai)| vi * (ai / a_norm)).sum();
    let perp2: f64 = v
        .iter()
        .zip(a)
        .map(|(vi, ai)| {
            let p = vi - along * (ai / a_norm);
            p * p
        })
        .sum();

    // 1 + |v⊥|² is the radicand scaled by a·a; guard kept for the invariant.
    let radicand = 1.0 + perp2;
    let radicand = if radicand < 0.0 {
        if -radicand <= RADICAND_ROUNDOFF * (1.0 + vv) {
            0.0
        } else {
            return Err(Error::NegativeRadicand(radicand));
        }
    } else {
        radicand
    };

    let w = 1.0 + vv;
    Ok(a_norm * libm::sqrt(radicand) / (w * libm::sqrt(w)))
}

/// Single-DOF curvature `|a| / (1 + v²)^{3/2}`.
pub fn curvature_1dof(v: f64, a: f64) -> Result<f64> {
    if !v.is_finite() || !a.is_finite() {
        return Err(Error::NonFinite("curvature input"));
    }
    let w = 1.0 + v * v;
    Ok(libm::fabs(a) / (w * libm::sqrt(w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Curvature of a general parametric curve from its first two derivatives,
    /// straight from `|τ'|²|τ''|² − (τ'·τ'')²` over `|τ'|⁶`.
    fn general_curvature(d1: &[f64], d2: &[f64]) -> f64 {
        let pp: f64 = d1.iter().map(|x| x * x).sum();
        let qq: f64 = d2.iter().map(|x| x * x).sum();
        let pq: f64 = d1.iter().zip(d2).map(|(x, y)| x * y).sum();
        libm::sqrt(((pp * qq - pq * pq) / (pp * pp * pp)).max(0.0))
    }

    #[test]
    fn zero_motion_has_zero_curvature() {
        assert_eq!(curvature(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(curvature_1dof(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn at_rest_curvature_is_acceleration_magnitude() {
        assert_eq!(curvature(&[0.0], &[-7.5]).unwrap(), 7.5);
        assert_eq!(curvature_1dof(0.0, 5.0).unwrap(), 5.0);
    }

    #[test]
    fn free_fall_matches_parametric_curve() {
        // d(t) = h0 - g t²/2 at t = 0.3, g = 10: τ' = (1, -3), τ'' = (0, -10).
        let oracle = general_curvature(&[1.0, -3.0], &[0.0, -10.0]);
        let expected = 10.0 / libm::pow(10.0, 1.5);
        assert!((oracle - expected).abs() < 1e-15);
        let k = curvature(&[-3.0], &[-10.0]).unwrap();
        assert!((k - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn one_dof_reference_value() {
        let k = curvature_1dof(3.0, 10.0).unwrap();
        assert!((k - 0.316_227_766_016_837_94).abs() < 1e-15);
        assert_eq!(k, curvature(&[3.0], &[10.0]).unwrap());
    }

    #[test]
    fn multi_dof_matches_general_formula() {
        let v = [0.3, -1.2, 2.0];
        let a = [4.0, 0.5, -3.0];
        let oracle = general_curvature(&[1.0, 0.3, -1.2, 2.0], &[0.0, 4.0, 0.5, -3.0]);
        let k = curvature(&v, &a).unwrap();
        assert!((k - oracle).abs() < 1e-13 * oracle);
    }

    #[test]
    fn parallel_velocity_and_acceleration() {
        // v ∥ a: the perpendicular part vanishes, k = |a| / (1+|v|²)^{3/2}.
        let k = curvature(&[3.0, 4.0], &[6.0, 8.0]).unwrap();
        let expected = 10.0 / libm::pow(26.0, 1.5);
        assert!((k - expected).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(
            curvature(&[1.0, 2.0], &[1.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 1 }
        );
        assert!(curvature(&[], &[]).is_err());
        assert_eq!(
            curvature(&[f64::INFINITY], &[1.0]).unwrap_err(),
            Error::NonFinite("curvature input")
        );
        assert!(curvature_1dof(f64::NAN, 1.0).is_err());
        assert!(CurvatureSample::new(0.0, -1.0).is_err());
    }
}
