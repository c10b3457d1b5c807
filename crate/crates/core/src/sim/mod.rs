//! Closed-loop receding-horizon simulation.

mod planner;
mod run;
mod scenario;
mod trace;

pub use planner::{apply_first_step, offsets_for, sample_state, CycleOutcome, PlanContext, Planner, PlannerConfig};
pub use run::{headway, run_closed_loop, run_with, ClosedLoop, RunOutput, SolverStats};
pub use scenario::{
    builtin_names, ConstructionZone, EgoInit, LaneChange, ReplayConfig, RoadConfig, ScenarioConfig, ScriptedVehicle,
    SpeedChange, Traffic, TrafficConfig, TrafficSource, STATIC_ID_BASE,
};
pub use trace::{
    compute_metrics, format_barriers, parse_trace, read_trace, trace_period, trace_to_string, write_trace, Metrics, TraceRow,
    TRACE_COLUMNS,
};
