//! Space-time capacity of mobile delay-tolerant networks.
//!
//! The crate couples an exact continuous-time simulator with closed-form
//! analytics:
//!
//! - [`mobility`]: billiard / random-walk trajectories in an `L x L` square.
//! - [`contacts`]: exact encounter intervals (pairwise distance `<= R`).
//! - [`dissemination`]: capacity-constrained epidemic broadcast and the
//!   three-stage rendezvous routing scheme.
//! - [`meetings`]: meeting-rate and meeting-duration laws, with estimators
//!   that confront simulated contacts with them.
//! - [`bounds`]: the kernel upper bound on information propagation speed,
//!   backed by in-crate modified Bessel functions.
//! - [`harness`]: experiment runner, speed estimators, CSV and SVG output.
//!
//! A journey of capacity `y` is one where every transmission lasts at least
//! `y / G` seconds (its *thickness*). Propagation speed `s(y)` is measured in
//! m/s and the space-time capacity is `c(y) = s(y) * y`.

pub mod bounds;
pub mod contacts;
pub mod dissemination;
mod error;
pub mod geometry;
pub mod harness;
pub mod meetings;
pub mod mobility;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use rng::RandomStream;
pub use scenario::{build_scenario, RawConfig, ScenarioParams};
