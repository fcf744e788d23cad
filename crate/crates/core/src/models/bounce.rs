//! Particle dropped onto a fixed particle, with a linear contact spring.
//!
//! The fixed partner reduces the two-particle contact to one DOF: the height
//! `h` of the free particle above first touch. The spring acts while `h ≤ 0`.

use core::f64::consts::PI;

use crate::{Error, MechanicalSystem, Result, SystemState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceParams {
    /// Gravity [m/s²].
    pub g: f64,
    /// Release height [m].
    pub h0: f64,
    /// Contact stiffness [N/m].
    pub k_c: f64,
    /// Particle mass [kg].
    pub mass: f64,
    /// Critical step used to configure controllers [s].
    pub dt_crit: f64,
}

impl Default for BounceParams {
    fn default() -> Self {
        BounceParams { g: 10.0, h0: 1.25, k_c: 1e10, mass: 1.0, dt_crit: 2e-5 }
    }
}

impl BounceParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.g, self.h0, self.k_c, self.mass, self.dt_crit];
        if all.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("bounce parameters must be positive and finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounce {
    params: BounceParams,
    mass: [f64; 1],
}

impl Default for Bounce {
    fn default() -> Self {
        Bounce::new(BounceParams::default()).expect("default parameters are valid")
    }
}

impl Bounce {
    pub fn new(params: BounceParams) -> Result<Self> {
        params.validate()?;
        Ok(Bounce { params, mass: [params.mass] })
    }

    pub fn params(&self) -> &BounceParams {
        &self.params
    }

    /// Released from rest at `h0`.
    pub fn initial_state(&self) -> SystemState {
        SystemState {
            t: 0.0,
            d: alloc::vec![self.params.h0],
            v: alloc::vec![0.0],
            a: alloc::vec![-self.params.g],
        }
    }

    /// Upward contact force for height `h`.
    pub fn contact_force(&self, h: f64) -> f64 {
        if h <= 0.0 {
            -self.params.k_c * h
        } else {
            0.0
        }
    }

    /// Kinetic, gravitational and contact-spring energy.
    pub fn energy(&self, h: f64, v: f64) -> f64 {
        let p = &self.params;
        let pen = if h < 0.0 { -h } else { 0.0 };
        0.5 * p.mass * v * v + p.mass * p.g * h + 0.5 * p.k_c * pen * pen
    }
}

impl MechanicalSystem for Bounce {
    fn dof(&self) -> usize {
        1
    }

    fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    fn acceleration(&self, _t: f64, d: &[f64], _v: &[f64], out: &mut [f64]) {
        out[0] = -self.params.g + self.contact_force(d[0]) / self.params.mass;
    }
}

/// Closed-form trajectory of the bouncing particle: free fall, contact
/// oscillation, free rise, repeated with period `t_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceAnalytic {
    pub params: BounceParams,
    /// First touch.
    pub t_q: f64,
    /// Contact duration.
    pub t_cont: f64,
    /// End of contact.
    pub t_ac: f64,
    /// Period.
    pub t_f: f64,
    omega: f64,
    /// `m g / k`
    sag: f64,
    /// `sqrt(2 m g h0 / k)`
    amp: f64,
}

impl BounceAnalytic {
    pub fn new(params: BounceParams) -> Result<Self> {
        params.validate()?;
        let p = &params;
        let omega = libm::sqrt(p.k_c / p.mass);
        let sag = p.mass * p.g / p.k_c;
        let amp = libm::sqrt(2.0 * p.mass * p.g * p.h0 / p.k_c);
        let t_q = libm::sqrt(2.0 * p.h0 / p.g);
        let mut s = BounceAnalytic { params, t_q, t_cont: 0.0, t_ac: 0.0, t_f: 0.0, omega, sag, amp };
        s.t_cont = s.contact_duration()?;
        s.t_ac = s.t_q + s.t_cont;
        s.t_f = 2.0 * s.t_q + s.t_cont;
        Ok(s)
    }

    fn contact_height(&self, tc: f64) -> f64 {
        let th = self.omega * tc;
        self.sag * libm::cos(th) - self.amp * libm::sin(th) - self.sag
    }

    fn contact_velocity(&self, tc: f64) -> f64 {
        let th = self.omega * tc;
        -self.omega * (self.sag * libm::sin(th) + self.amp * libm::cos(th))
    }

    /// First positive root of the contact branch, by bisection on a bracket
    /// inside `(π/ω, 2π/ω)` where the branch goes from below to above zero.
    fn contact_duration(&self) -> Result<f64> {
        let lo_th = PI;
        let mut gap = 0.5 * PI;
        let mut hi_th = 2.0 * PI - gap;
        let mut found = false;
        for _ in 0..200 {
            if self.contact_height(hi_th / self.omega) > 0.0 {
                found = true;
                break;
            }
            gap *= 0.5;
            hi_th = 2.0 * PI - gap;
        }
        if !found || !(self.contact_height(lo_th / self.omega) < 0.0) {
            return Err(Error::RootNotBracketed);
        }
        let (mut lo, mut hi) = (lo_th / self.omega, hi_th / self.omega);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo < 1e-15 * hi {
                break;
            }
            if self.contact_height(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn reduce(&self, t: f64) -> f64 {
        if t <= self.t_f {
            t
        } else {
            t - libm::floor(t / self.t_f) * self.t_f
        }
    }

    /// Height at `t ≥ 0`.
    pub fn height(&self, t: f64) -> f64 {
        let p = &self.params;
        let t = self.reduce(t);
        if t <= self.t_q {
            p.h0 - 0.5 * p.g * t * t
        } else if t <= self.t_ac {
            self.contact_height(t - self.t_q)
        } else {
            let tr = t - self.t_ac;
            tr * libm::sqrt(2.0 * p.g * p.h0) - 0.5 * p.g * tr * tr
        }
    }

    /// Vertical velocity at `t ≥ 0`.
    pub fn velocity(&self, t: f64) -> f64 {
        let p = &self.params;
        let t = self.reduce(t);
        if t <= self.t_q {
            -p.g * t
        } else if t <= self.t_ac {
            self.contact_velocity(t - self.t_q)
        } else {
            libm::sqrt(2.0 * p.g * p.h0) - p.g * (t - self.t_ac)
        }
    }
}

/// Height of the bouncing particle at time `t`.
pub fn bounce_analytic(t: f64, params: &BounceParams) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidConfig("analytic bounce needs t >= 0"));
    }
    Ok(BounceAnalytic::new(*params)?.height(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> BounceAnalytic {
        BounceAnalytic::new(BounceParams::default()).unwrap()
    }

    #[test]
    fn acceleration_law() {
        let b = Bounce::default();
        let mut a = [0.0];
        b.acceleration(0.0, &[0.3], &[0.0], &mut a);
        assert_eq!(a[0], -10.0);
        b.acceleration(0.0, &[0.0], &[0.0], &mut a);
        assert_eq!(a[0], -10.0);
        b.acceleration(0.0, &[-1e-9], &[0.0], &mut a);
        assert!((a[0] - (-10.0 + 1e10 * 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn key_instants() {
        let o = oracle();
        assert_eq!(o.height(0.0), 1.25);
        assert!((o.t_q - 0.5).abs() < 1e-15);
        assert!(o.height(o.t_q).abs() < 1e-15);
        assert!((o.height(0.25) - 0.9375).abs() < 1e-15);
    }

    #[test]
    fn contact_duration_matches_half_angle_form() {
        // A(cosθ − 1) = B sinθ  ⇔  tan(θ/2) = −B/A  ⇒  θ = 2π − 2 atan(B/A)
        let p = BounceParams::default();
        let a = p.mass * p.g / p.k_c;
        let b = libm::sqrt(2.0 * p.mass * p.g * p.h0 / p.k_c);
        let theta = 2.0 * PI - 2.0 * libm::atan(b / a);
        let expected = theta / libm::sqrt(p.k_c / p.mass);
        let o = oracle();
        assert!((o.t_cont - expected).abs() < 1e-12, "{} vs {}", o.t_cont, expected);
        assert!(o.height(o.t_ac).abs() < 1e-12);
    }

    #[test]
    fn periodic() {
        let o = oracle();
        assert!((o.height(o.t_f) - 1.25).abs() < 1e-12);
        assert!((o.height(2.0 * o.t_f + 0.25) - 0.9375).abs() < 1e-9);
    }

    #[test]
    fn energy_is_conserved_by_the_closed_form() {
        let o = oracle();
        let b = Bounce::default();
        let e0 = b.energy(1.25, 0.0);
        let ts = [0.1, 0.49, o.t_q + 1e-6, o.t_q + 0.5 * o.t_cont, o.t_ac - 1e-7, 0.8, 1.7];
        for t in ts {
            let e = b.energy(o.height(t), o.velocity(t));
            assert!((e - e0).abs() < 1e-8 * e0, "t = {t}: {e} vs {e0}");
        }
    }

    #[test]
    fn rejects_negative_time() {
        assert!(bounce_analytic(-1.0, &BounceParams::default()).is_err());
        assert_eq!(bounce_analytic(0.0, &BounceParams::default()).unwrap(), 1.25);
    }
}
