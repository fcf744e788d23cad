use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, MechanicalSystem, Result};

/// `M a + C v + K d = f(t)` with diagonal `M` and dense row-major `C`, `K`.
pub struct LinearSystem<F = fn(f64, &mut [f64])> {
    mass: Vec<f64>,
    damping: Vec<f64>,
    stiffness: Vec<f64>,
    load: F,
}

fn no_load(_t: f64, f: &mut [f64]) {
    f.fill(0.0);
}

impl LinearSystem {
    /// Undamped, unloaded system.
    pub fn new(mass: Vec<f64>, stiffness: Vec<f64>) -> Result<Self> {
        let n = mass.len();
        Self::with_load(mass, vec![0.0; n * n], stiffness, no_load as fn(f64, &mut [f64]))
    }

    /// Unit-mass oscillator `a = −ω² d`.
    pub fn oscillator(omega: f64) -> Self {
        Self::new(vec![1.0], vec![omega * omega]).expect("valid oscillator")
    }
}

impl<F: Fn(f64, &mut [f64])> LinearSystem<F> {
    pub fn with_load(mass: Vec<f64>, damping: Vec<f64>, stiffness: Vec<f64>, load: F) -> Result<Self> {
        let n = mass.len();
        if n == 0 {
            return Err(Error::InvalidConfig("linear system needs at least one DOF"));
        }
        if damping.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: damping.len() });
        }
        if stiffness.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: stiffness.len() });
        }
        if !mass.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(Error::InvalidConfig("masses must be positive and finite"));
        }
        Ok(LinearSystem { mass, damping, stiffness, load })
    }
}

impl<F: Fn(f64, &mut [f64])> MechanicalSystem for LinearSystem<F> {
    fn dof(&self) -> usize {
        self.mass.len()
    }

    fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    fn acceleration(&self, t: f64, d: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.mass.len();
        (self.load)(t, out);
        for i in 0..n {
            let row = i * n..(i + 1) * n;
            let c = &self.damping[row.clone()];
            let k = &self.stiffness[row];
            let internal: f64 = (0..n).map(|j| c[j] * v[j] + k[j] * d[j]).sum();
            out[i] = (out[i] - internal) / self.mass[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_acceleration() {
        let sys = LinearSystem::oscillator(3.0);
        let mut a = [0.0];
        sys.acceleration(0.0, &[2.0], &[5.0], &mut a);
        assert_eq!(a[0], -18.0);
    }

    #[test]
    fn loaded_damped_two_dof() {
        let sys = LinearSystem::with_load(
            vec![2.0, 4.0],
            vec![1.0, 0.0, 0.0, 2.0],
            vec![10.0, -5.0, -5.0, 5.0],
            |t: f64, f: &mut [f64]| {
                f[0] = t;
                f[1] = 0.0;
            },
        )
        .unwrap();
        let mut a = [0.0; 2];
        sys.acceleration(4.0, &[1.0, 1.0], &[1.0, 1.0], &mut a);
        assert_eq!(a, [(4.0 - 1.0 - 5.0) / 2.0, (0.0 - 2.0 - 0.0) / 4.0]);
    }

    #[test]
    fn shape_checks() {
        assert!(LinearSystem::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(LinearSystem::new(vec![0.0], vec![1.0]).is_err());
        assert!(LinearSystem::new(vec![], vec![]).is_err());
    }
}
