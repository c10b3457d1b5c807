//! Parallel Bezier trajectory optimization with discrete barrier constraints.
//!
//! Each planning cycle samples several lane-level goals, optimizes one
//! trajectory per goal jointly with ADMM, scores them and executes the
//! first step of the best one. The [`sim`] module closes the loop against
//! synthetic or recorded traffic.

pub mod admm;
pub mod barrier;
pub mod bezier;
#[cfg(feature = "cli")]
pub mod cli;
mod clock;
pub mod error;
pub mod evaluator;
pub mod goal_sampler;
pub mod sim;
pub mod state;
pub mod traffic;

pub use error::{PlannerError, Result};
pub use state::EgoState;
