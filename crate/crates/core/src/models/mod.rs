//! Benchmark mechanical systems.

mod bounce;
mod dolly;
mod linear;

pub use bounce::{bounce_analytic, Bounce, BounceAnalytic, BounceParams};
pub use dolly::{Dolly, DollyExcitation, DollyParams, DOLLY_DOF};
pub use linear::LinearSystem;
