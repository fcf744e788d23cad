//! Seven-DOF four-wheel dolly with unilateral ground springs.
//!
//! DOFs 1–4 are wheel heaves, 5 the body heave, 6 and 7 the body rotations.
//! Each wheel rests on a ground spring that only acts while the wheel
//! displacement is nonpositive. A triangular pulse lifts wheel 1.

use alloc::vec::Vec;

use crate::{Error, MechanicalSystem, Result, SystemState};

pub const DOLLY_DOF: usize = 7;

/// Which wheels receive the triangular excitation pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DollyExcitation {
    Wheel1,
    AllWheels,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DollyParams {
    /// Wheel mass `m` [kg].
    pub wheel_mass: f64,
    /// Body heave inertia `M` (DOF 5).
    pub body_mass: f64,
    /// Body rotational inertia `I` (DOFs 6 and 7) [kg m²].
    pub inertia: f64,
    /// Suspension damping `c` [N s/m].
    pub damping: f64,
    /// Suspension stiffness `k` [N/m].
    pub stiffness: f64,
    /// Ground spring stiffness `K` [N/m].
    pub ground_stiffness: f64,
    /// Lever arm `L` [m].
    pub arm: f64,
    /// Dead load magnitude `W` on DOF 5 [N].
    pub weight: f64,
    /// Pulse peak `f_max` [N].
    pub f_max: f64,
    /// Pulse rise time `t̄` [s].
    pub t_bar: f64,
    pub excitation: DollyExcitation,
}

impl Default for DollyParams {
    fn default() -> Self {
        DollyParams {
            wheel_mass: 8.7563,
            body_mass: 525.3804,
            inertia: 10507.6080,
            damping: 700.51,
            stiffness: 87563.43,
            ground_stiffness: 175126.85,
            arm: 0.6096,
            weight: 5151.04,
            f_max: 2224.11,
            t_bar: 0.025,
            excitation: DollyExcitation::Wheel1,
        }
    }
}

impl DollyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wheel_mass,
            self.body_mass,
            self.inertia,
            self.damping,
            self.stiffness,
            self.ground_stiffness,
            self.arm,
            self.weight,
            self.f_max,
            self.t_bar,
        ];
        if all.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("dolly parameters must be positive and finite"))
        }
    }
}

type Mat7 = [[f64; DOLLY_DOF]; DOLLY_DOF];

#[derive(Debug, Clone, PartialEq)]
pub struct Dolly {
    params: DollyParams,
    mass: [f64; DOLLY_DOF],
    damping: Mat7,
    suspension: Mat7,
}

/// Suspension coupling pattern shared by the damping and stiffness matrices,
/// scaled by the element coefficient.
fn coupling(s: f64, l: f64) -> Mat7 {
    [
        [s, 0.0, 0.0, 0.0, -s, -l * s, l * s],
        [0.0, s, 0.0, 0.0, -s, l * s, l * s],
        [0.0, 0.0, s, 0.0, -s, -l * s, -l * s],
        [0.0, 0.0, 0.0, s, -s, l * s, -l * s],
        [-s, -s, -s, -s, 4.0 * s, 0.0, 0.0],
        [-l * s, l * s, -l * s, l * s, 0.0, 4.0 * s * l * l, 0.0],
        [l * s, l * s, -l * s, -l * s, 0.0, 0.0, 4.0 * s * l * l],
    ]
}

impl Dolly {
    pub fn new(params: DollyParams) -> Result<Self> {
        params.validate()?;
        let p = &params;
        Ok(Dolly {
            mass: [p.wheel_mass, p.wheel_mass, p.wheel_mass, p.wheel_mass, p.body_mass, p.inertia, p.inertia],
            damping: coupling(p.damping, p.arm),
            suspension: coupling(p.stiffness, p.arm),
            params,
        })
    }

    pub fn params(&self) -> &DollyParams {
        &self.params
    }

    pub fn damping_matrix(&self) -> Mat7 {
        self.damping
    }

    /// Stiffness matrix with the ground springs switched according to `d`.
    pub fn stiffness_matrix(&self, d: &[f64]) -> Mat7 {
        let mut k = self.suspension;
        for (w, row) in k.iter_mut().take(4).enumerate() {
            row[w] += self.ground_spring(d[w]);
        }
        k
    }

    /// Ground spring stiffness `k_{w+5}` for wheel displacement `d`.
    pub fn ground_spring(&self, d: f64) -> f64 {
        if d <= 0.0 {
            self.params.ground_stiffness
        } else {
            0.0
        }
    }

    /// Force in the ground spring under wheel `wheel` (0-based): `k(d) d`.
    pub fn ground_force(&self, wheel: usize, d: f64) -> f64 {
        debug_assert!(wheel < 4);
        self.ground_spring(d) * d
    }

    /// Triangular pulse: ramps to `f_max` at `t̄`, back to zero at `2t̄`.
    pub fn pulse(&self, t: f64) -> f64 {
        let p = &self.params;
        if t < 0.0 {
            0.0
        } else if t <= p.t_bar {
            p.f_max * t / p.t_bar
        } else if t <= 2.0 * p.t_bar {
            p.f_max * (2.0 - t / p.t_bar)
        } else {
            0.0
        }
    }

    pub fn external_force(&self, t: f64) -> [f64; DOLLY_DOF] {
        let f1 = self.pulse(t);
        let mut f = [0.0; DOLLY_DOF];
        match self.params.excitation {
            DollyExcitation::Wheel1 => f[0] = f1,
            DollyExcitation::AllWheels => f[..4].fill(f1),
        }
        f[4] = -self.params.weight;
        f
    }

    /// Static configuration under the dead load with all wheels grounded:
    /// wheels at `−W/(4K)`, body at `−W(k+K)/(4kK)`.
    pub fn initial_displacement(&self) -> Vec<f64> {
        let p = &self.params;
        let wheel = -p.weight / (4.0 * p.ground_stiffness);
        let series = p.stiffness * p.ground_stiffness / (p.stiffness + p.ground_stiffness);
        let body = -p.weight / (4.0 * series);
        alloc::vec![wheel, wheel, wheel, wheel, body, 0.0, 0.0]
    }

    /// At rest in the static configuration, acceleration from one force evaluation.
    pub fn initial_state(&self) -> SystemState {
        let mut s = SystemState {
            t: 0.0,
            d: self.initial_displacement(),
            v: alloc::vec![0.0; DOLLY_DOF],
            a: alloc::vec![0.0; DOLLY_DOF],
        };
        self.acceleration(0.0, &s.d, &s.v, &mut s.a);
        s
    }
}

impl MechanicalSystem for Dolly {
    fn dof(&self) -> usize {
        DOLLY_DOF
    }

    fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    fn acceleration(&self, t: f64, d: &[f64], v: &[f64], out: &mut [f64]) {
        let f = self.external_force(t);
        for i in 0..DOLLY_DOF {
            let mut internal = 0.0;
            for j in 0..DOLLY_DOF {
                internal += self.damping[i][j] * v[j] + self.suspension[i][j] * d[j];
            }
            if i < 4 {
                internal += self.ground_force(i, d[i]);
            }
            out[i] = (f[i] - internal) / self.mass[i];
        }
    }
}
