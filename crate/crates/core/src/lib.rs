//! Adaptive time stepping for explicit structural dynamics.
//!
//! The step size is driven by the first Frenet curvature of the displacement
//! history curve `(t, d(t))`, regularized by a max-in-interval filter with
//! optional sub-interval rejection. Apparent-frequency, local-error and
//! fixed-step controllers share the same [`StepController`] contract so they
//! can be compared on equal terms.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, caching and
//! the command line live in the `curvstep` companion crate.
//!
//! ```
//! use curvstep_core::{models::Bounce, stepcontrol::FixedStep, Integrator, RunOptions, run};
//!
//! let ball = Bounce::default();
//! let mut ctrl = FixedStep::new(1e-3).unwrap();
//! let rec = run(&ball, ball.initial_state(), &mut Integrator::cdm(), &mut ctrl, 0.1, RunOptions::default())
//!     .unwrap();
//! let last = rec.last().unwrap();
//! assert!((last.d[0] - (1.25 - 0.5 * 10.0 * 0.01)).abs() < 1e-12);
//! ```

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod curvature;
mod error;
pub mod integrators;
pub mod models;
pub mod record;
mod state;
pub mod stepcontrol;
pub mod vecops;

pub use curvature::{curvature, curvature_1dof, CurvatureSample};
pub use error::{Error, Result};
pub use integrators::{run, Integrator, IntegratorKind, RunFailure, RunOptions, StepReport};
pub use record::{RunRecord, Sample};
pub use state::{MechanicalSystem, SystemState};
pub use stepcontrol::{StepController, StepDecision};
