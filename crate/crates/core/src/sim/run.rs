use serde::{Deserialize, Serialize};

use super::planner::{apply_first_step, sample_state, CycleOutcome, PlanContext, Planner};
use super::scenario::{ScenarioConfig, Traffic};
use super::trace::{compute_metrics, format_barriers, Metrics, TraceRow};
use crate::admm::SolverResult;
use crate::barrier::ellipse_coords;
use crate::error::Result;
use crate::state::EgoState;
use crate::traffic::{nearest_hvs, Footprint, HvState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub cycles: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
    pub faults: usize,
    pub fault_rate: f64,
    pub cycle_ms: Vec<f64>,
}

impl SolverStats {
    pub fn from_samples(cycle_ms: Vec<f64>, iterations: &[usize], converged: usize, faults: usize, cycles: usize) -> Self {
        let mut sorted = cycle_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let pick = |q: f64| {
            if sorted.is_empty() {
                0.0
            } else {
                sorted[((sorted.len() - 1) as f64 * q).round() as usize]
            }
        };
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let its: Vec<f64> = iterations.iter().map(|&i| i as f64).collect();
        Self {
            cycles,
            mean_ms: mean(&cycle_ms),
            median_ms: pick(0.5),
            p95_ms: pick(0.95),
            max_ms: sorted.last().copied().unwrap_or(0.0),
            mean_iterations: mean(&its),
            converged_fraction: if cycles == 0 { 0.0 } else { converged as f64 / cycles as f64 },
            faults,
            fault_rate: if cycles == 0 { 0.0 } else { faults as f64 / cycles as f64 },
            cycle_ms,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub metrics: Metrics,
    pub stats: SolverStats,
}

/// Center distance to the nearest vehicle ahead whose center lies within half a lane of the ego.
pub fn headway(ev: &EgoState, hvs: &[HvState], lane_width: f64) -> Option<(u32, f64)> {
    hvs.iter()
        .filter(|h| h.x > ev.px && (h.y - ev.py).abs() < lane_width / 2.0)
        .map(|h| (h.id, h.x - ev.px))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Previous plan kept for fail-operational fallback.
#[derive(Debug, Clone)]
struct Fallback {
    result: SolverResult,
    index: usize,
    used: usize,
}

/// Receding-horizon loop: plan, execute the first sample, advance traffic, record.
pub fn run_closed_loop(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    let planner = Planner::new(config.planner.clone())?;
    let mut traffic = config.build_traffic()?;
    run_with(config, &planner, &mut traffic)
}

pub fn run_with(config: &ScenarioConfig, planner: &Planner, traffic: &mut Traffic) -> Result<RunOutput> {
    let mut session = ClosedLoop::new(config, traffic);
    let mut rows = Vec::with_capacity(config.steps());
    for _ in 0..config.steps() {
        rows.push(session.step(planner, traffic).0);
    }
    Ok(session.finish(rows))
}

/// State carried between cycles of a closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    config: ScenarioConfig,
    pub ego: EgoState,
    pub context: PlanContext,
    fallback: Option<Fallback>,
    warm: Option<SolverResult>,
    step: usize,
    cycle_ms: Vec<f64>,
    iterations: Vec<usize>,
    converged: usize,
    faults: usize,
}

impl ClosedLoop {
    pub fn new(config: &ScenarioConfig, traffic: &Traffic) -> Self {
        let ego = config.initial_ego();
        let start_lane = traffic.lane_of(ego.py);
        let road = &config.road;
        let context = PlanContext {
            lane_centers: road.lane_centers.clone(),
            y_bounds: road.y_bounds,
            goal_y_bounds: road.y_bounds,
            lateral_reference: road.lane_centers[start_lane],
            last_lane: start_lane,
            last_maneuver: 0,
        };
        Self {
            config: config.clone(),
            ego,
            context,
            fallback: None,
            warm: None,
            step: 0,
            cycle_ms: Vec::new(),
            iterations: Vec::new(),
            converged: 0,
            faults: 0,
        }
    }

    /// One cycle. Returns the recorded row and the planner outcome when planning succeeded.
    pub fn step(&mut self, planner: &Planner, traffic: &mut Traffic) -> (TraceRow, Option<CycleOutcome>) {
        let config = &self.config;
        let dt = config.planner.dt;
        let road = &config.road;
        let ego_size = (config.ego.length, config.ego.width);
        let step = self.step;
        let ctx = &mut self.context;
        let ev = self.ego;

        let hvs = traffic.states();
        let half_width = config.ego.width / 2.0;
        ctx.y_bounds = config.construction.iter().fold(road.y_bounds, |b, z| z.tighten(b, &ev, half_width));
        ctx.goal_y_bounds = config.construction.iter().fold(road.y_bounds, |b, z| z.goal_bounds(b, &ev, half_width));
        let outcome = planner.plan(&ev, &hvs, ctx, self.warm.as_ref());
        let (next, fault, iters, conv, residual, kept) = match outcome {
            Ok(out) => {
                self.cycle_ms.push(out.solve_seconds * 1e3);
                self.iterations.push(out.result.iterations);
                self.converged += out.result.converged as usize;
                let sel = &out.selection;
                if log::log_enabled!(log::Level::Debug) {
                    for (j, c) in out.candidates.iter().enumerate() {
                        log::debug!(
                            "cycle {step} cand {j} goal ({:.1}, {:.2}) lane {} costs {:.3?} score {:.1}",
                            out.goals.x[j] - ev.px,
                            out.goals.y[j],
                            c.target_lane,
                            c.costs,
                            sel.scores[j]
                        );
                    }
                }
                let next = apply_first_step(&out.result, sel.index, &planner.basis);
                ctx.last_lane = sel.target_lane;
                ctx.last_maneuver = sel.maneuver;
                ctx.lateral_reference = road.lane_centers[sel.target_lane];
                let stats = (out.result.iterations, out.result.converged, out.result.final_residual());
                self.fallback = Some(Fallback { result: out.result.clone(), index: sel.index, used: 0 });
                self.warm = Some(out.result.clone());
                (next, false, stats.0, stats.1, stats.2, Some(out))
            }
            Err(err) => {
                self.faults += 1;
                log::warn!("cycle {step}: planner fault, reusing previous plan: {err}");
                self.warm = None;
                let next = match self.fallback.as_mut() {
                    Some(f) if f.used + 1 < planner.config.steps => {
                        f.used += 1;
                        sample_state(&f.result, f.index, &planner.basis, f.used)
                    }
                    _ => coast(&ev, dt),
                };
                (next, true, 0, false, f64::NAN, None)
            }
        };
        let ev = next;
        self.ego = ev;
        self.step += 1;
        traffic.step(dt, &ev, ego_size);

        let hvs = traffic.states();
        let ego_fp = Footprint { x: ev.px, y: ev.py, length: ego_size.0, width: ego_size.1 };
        let collision = traffic.footprints().iter().any(|(_, f)| f.overlaps(&ego_fp));
        let perceived = nearest_hvs(&ev, &hvs, planner.config.max_obstacles, planner.config.lateral_range);
        let barriers: Vec<(u32, f64)> = perceived
            .iter()
            .map(|h| (h.id, ellipse_coords(ev.position(), h.position(), &planner.config.barrier).h))
            .collect();
        let moving: Vec<HvState> = hvs.iter().filter(|h| h.id < super::scenario::STATIC_ID_BASE || h.speed() > 0.0).copied().collect();
        let lead = headway(&ev, &moving, road.lane_width);
        let row = TraceRow {
            step,
            time: (step + 1) as f64 * dt,
            px: ev.px,
            py: ev.py,
            heading: ev.heading,
            yaw_rate: ev.yaw_rate,
            speed: ev.speed,
            ax: ev.ax,
            ay: ev.ay,
            jx: ev.jx,
            jy: ev.jy,
            maneuver: ctx.last_maneuver,
            target_lane: ctx.last_lane,
            lane: traffic.lane_of(ev.py),
            headway: lead.map(|l| l.1),
            headway_id: lead.map(|l| l.0),
            min_barrier: barriers.iter().map(|b| b.1).reduce(f64::min),
            barriers: format_barriers(&barriers),
            iterations: iters,
            converged: conv,
            residual,
            fault,
            collision,
        };
        (row, kept)
    }

    /// Metrics and solver statistics over the recorded rows.
    pub fn finish(self, rows: Vec<TraceRow>) -> RunOutput {
        let cycles = rows.len();
        let metrics = compute_metrics(&rows, self.config.planner.dt);
        let stats = SolverStats::from_samples(self.cycle_ms, &self.iterations, self.converged, self.faults, cycles);
        RunOutput { trace: rows, metrics, stats }
    }
}

/// Constant-velocity extrapolation when no plan is available.
fn coast(ev: &EgoState, dt: f64) -> EgoState {
    EgoState { px: ev.px + ev.vx() * dt, py: ev.py + ev.vy() * dt, ax: 0.0, ay: 0.0, jx: 0.0, jy: 0.0, yaw_rate: 0.0, ..*ev }
}
