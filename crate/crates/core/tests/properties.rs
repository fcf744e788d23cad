use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvstep_core::models::LinearSystem;
use curvstep_core::stepcontrol::{dt_from_curvature, CurvatureControllerConfig, CurvatureFilter};
use curvstep_core::{curvature, curvature_1dof, CurvatureSample, Integrator, IntegratorKind, SystemState};

fn schemes() -> [IntegratorKind; 6] {
    [
        IntegratorKind::Cdm,
        IntegratorKind::EgAlpha { rho_b: 0.0 },
        IntegratorKind::EgAlpha { rho_b: 0.8 },
        IntegratorKind::EgAlpha { rho_b: 1.0 },
        IntegratorKind::ChungLee { beta: 1.0 },
        IntegratorKind::ChungLee { beta: 28.0 / 27.0 },
    ]
}

/// Largest stable `ω Δt`, from the spectral radius of each scheme.
fn stability_limit(kind: IntegratorKind) -> f64 {
    match kind {
        IntegratorKind::Cdm => 2.0,
        IntegratorKind::EgAlpha { rho_b } if rho_b == 1.0 => 2.0,
        IntegratorKind::EgAlpha { rho_b } if rho_b == 0.8 => 1.98,
        IntegratorKind::EgAlpha { .. } => 1.55,
        IntegratorKind::ChungLee { beta } if beta == 1.0 => 2.0,
        IntegratorKind::ChungLee { .. } => 1.867,
    }
}

fn oscillator_state(omega: f64) -> SystemState {
    SystemState::new(0.0, vec![1.0], vec![0.0], vec![-omega * omega]).unwrap()
}

/// Largest |d| over `n` steps of the unit oscillator, or infinity on blow-up.
fn peak_amplitude(kind: IntegratorKind, omega_dt: f64, n: usize) -> f64 {
    let sys = LinearSystem::oscillator(1.0);
    let mut integ = Integrator::new(kind).unwrap();
    let mut s = oscillator_state(1.0);
    let mut peak: f64 = 1.0;
    for _ in 0..n {
        match integ.step(&sys, &s, omega_dt) {
            Ok(r) => s = r.new_state,
            Err(_) => return f64::INFINITY,
        }
        peak = peak.max(s.d[0].abs());
    }
    peak
}

fn oscillator_error(kind: IntegratorKind, dt: f64) -> f64 {
    let sys = LinearSystem::oscillator(1.0);
    let mut integ = Integrator::new(kind).unwrap();
    let mut s = oscillator_state(1.0);
    let n = (1.0 / dt).round() as usize;
    for _ in 0..n {
        s = integ.step(&sys, &s, dt).unwrap().new_state;
    }
    (s.d[0] - s.t.cos()).abs()
}

fn signed_magnitude() -> impl Strategy<Value = f64> {
    (-6.0..6.0f64, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

proptest! {
    #[test]
    fn curvature_is_nonnegative(v in prop::collection::vec(signed_magnitude(), 1..8), a_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(a_seed);
        let a: Vec<f64> = v.iter().map(|_| rng.gen_range(-1e3..1e3)).collect();
        prop_assert!(curvature(&v, &a).unwrap() >= 0.0);
    }

    #[test]
    fn curvature_reduces_to_one_dof(v in signed_magnitude(), a in signed_magnitude()) {
        let multi = curvature(&[v], &[a]).unwrap();
        let single = curvature_1dof(v, a).unwrap();
        prop_assert!((multi - single).abs() <= 1e-12 * single.abs());
    }

    #[test]
    fn curvature_is_rotation_invariant(v in (-1e2..1e2f64, -1e2..1e2f64), a in (-1e2..1e2f64, -1e2..1e2f64), th in 0.0..6.28f64) {
        let (s, c) = th.sin_cos();
        let rot = |x: (f64, f64)| [c * x.0 - s * x.1, s * x.0 + c * x.1];
        let k0 = curvature(&[v.0, v.1], &[a.0, a.1]).unwrap();
        let k1 = curvature(&rot(v), &rot(a)).unwrap();
        prop_assert!((k0 - k1).abs() <= 1e-10 * k0.max(1e-300));
    }

    #[test]
    fn dt_is_monotone_and_bounded(k1 in 0.0..1e6f64, k2 in 0.0..1e6f64, b in 1e-4..1.0f64) {
        let cfg = CurvatureControllerConfig::new(b, 1e-6, 1e-3, 1.0).unwrap();
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let (d_lo, d_hi) = (dt_from_curvature(lo, &cfg).unwrap(), dt_from_curvature(hi, &cfg).unwrap());
        prop_assert!(d_hi <= d_lo);
        prop_assert!((1e-6..=1e-3).contains(&d_lo) && (1e-6..=1e-3).contains(&d_hi));
    }

    #[test]
    fn regularized_curvature_bounds_the_open_interval(ks in prop::collection::vec(0.0..100.0f64, 1..200), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut filter = CurvatureFilter::new(0.1, 0.5).unwrap();
        let mut t = 0.0;
        let mut open_max = 0.0f64;
        let mut index = filter.index();
        let mut last = 0.0;
        for k in ks {
            t += rng.gen_range(1e-4..0.05);
            let eff = filter.observe(CurvatureSample::new(t, k).unwrap()).unwrap();
            if filter.index() != index {
                open_max = 0.0;
                index = filter.index();
                prop_assert!(eff >= filter.last_finalized().map_or(0.0, |f| f.max_k));
            } else {
                open_max = open_max.max(k);
                prop_assert!(eff >= open_max);
                prop_assert!(eff >= last);
            }
            last = eff;
        }
    }

    #[test]
    fn constant_acceleration_is_exact(steps in prop::collection::vec(-6.0..-1.0f64, 1..200), scheme in 0usize..6) {
        let acc = -9.81;
        let sys = LinearSystem::with_load(vec![2.0], vec![0.0], vec![0.0], move |_t: f64, f: &mut [f64]| f[0] = 2.0 * acc).unwrap();
        let mut integ = Integrator::new(schemes()[scheme]).unwrap();
        let mut s = SystemState::new(0.0, vec![1.5], vec![-0.25], vec![acc]).unwrap();
        for e in steps {
            s = integ.step(&sys, &s, 10f64.powf(e)).unwrap().new_state;
            let d = 1.5 - 0.25 * s.t + 0.5 * acc * s.t * s.t;
            prop_assert!((s.d[0] - d).abs() <= 1e-12 * d.abs().max(1.0));
            prop_assert!((s.v[0] - (-0.25 + acc * s.t)).abs() <= 1e-12 * (acc * s.t).abs().max(1.0));
        }
    }
}

#[test]
fn stable_just_below_the_limit() {
    for kind in schemes() {
        let limit = stability_limit(kind);
        let peak = peak_amplitude(kind, 0.97 * limit, 20_000);
        assert!(peak < 10.0, "{kind:?} at 0.97 x limit: peak {peak}");
    }
}

#[test]
fn unstable_just_above_the_limit() {
    for kind in schemes() {
        let limit = stability_limit(kind);
        let peak = peak_amplitude(kind, 1.03 * limit, 20_000);
        assert!(peak > 1e3, "{kind:?} at 1.03 x limit: peak {peak}");
    }
}

#[test]
fn second_order_convergence() {
    for kind in schemes() {
        let ratio = oscillator_error(kind, 1e-2) / oscillator_error(kind, 5e-3);
        assert!((3.6..4.4).contains(&ratio), "{kind:?}: error ratio {ratio}");
    }
}

#[test]
fn cdm_keeps_oscillator_energy_bounded() {
    let sys = LinearSystem::oscillator(1.0);
    let mut integ = Integrator::cdm();
    let mut s = oscillator_state(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        s = integ.step(&sys, &s, 0.1).unwrap().new_state;
        worst = worst.max((0.5 * (s.d[0] * s.d[0] + s.v[0] * s.v[0]) - 0.5).abs());
    }
    assert!(worst < 0.01, "energy drift {worst}");
}
