//! Joint optimization of candidate trajectories by over-relaxed ADMM.

mod problem;
mod solver;

pub use problem::{assemble, nominal_control_points, Penalties, PositionBounds, ProblemData, SmoothnessWeights};
pub use solver::{
    solve, update_d, update_dual_overrelaxed, update_dual_plain, update_slack, EqualityMode, IterationRecord, Solver,
    SolverConfig, SolverResult, SolverState,
};
