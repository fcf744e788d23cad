//! Sampled output of an integration run.

use alloc::vec::Vec;

/// One accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// Step that produced this sample; zero for the initial state.
    pub dt: f64,
    /// Curvature of the displacement history at this sample.
    pub k_raw: f64,
    /// Signal driving the controller after this sample, if it has one
    /// (regularized curvature, relative local error).
    pub k_effective: Option<f64>,
    /// Force evaluations spent so far, discarded work included.
    pub force_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub integrator: &'static str,
    pub controller: &'static str,
    pub samples: Vec<Sample>,
    /// Total force evaluations, including the initial equilibration.
    pub force_evaluations: u64,
    /// Steps on the final trajectory.
    pub accepted_steps: u64,
    /// Steps thrown away by rejections, the rejected step itself included.
    pub discarded_steps: u64,
    pub rejections: u64,
}

impl RunRecord {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// `(t, cumulative force evaluations)` per sample.
    pub fn cumulative_steps(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.samples.iter().map(|s| (s.t, s.force_evaluations))
    }

    /// Cumulative force evaluations at the last sample with `t' <= t`.
    pub fn steps_at(&self, t: f64) -> u64 {
        let idx = self.samples.partition_point(|s| s.t <= t);
        if idx == 0 {
            0
        } else {
            self.samples[idx - 1].force_evaluations
        }
    }

    /// Step-size history as `(t, dt)`, skipping the initial sample.
    pub fn dt_history(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().skip(1).map(|s| (s.t, s.dt))
    }

    pub fn min_dt(&self) -> Option<f64> {
        self.dt_history().map(|(_, dt)| dt).reduce(f64::min)
    }

    pub fn max_dt(&self) -> Option<f64> {
        self.dt_history().map(|(_, dt)| dt).reduce(f64::max)
    }
}
