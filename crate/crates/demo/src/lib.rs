//! Browser bindings: step a closed-loop scenario, explore the double-S goal
//! distance and watch a barrier recover under the coefficient schedule.

use barrier_planner::barrier::{certify_recovery, dcbf_bound, linear_schedule, lyapunov_value};
use barrier_planner::goal_sampler::{double_s_distance, KinematicLimits};
use barrier_planner::sim::{offsets_for, ClosedLoop, Planner, ScenarioConfig, Traffic};
use barrier_planner::PlannerError;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Scenarios that need no file access.
pub const SCENARIOS: [&str; 4] = ["idm_cruise", "cut_in", "static_obstacle", "construction"];

fn js(e: PlannerError) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("demo payloads serialize")
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    to_json(&SCENARIOS)
}

#[derive(Debug, Serialize)]
pub struct Box2 {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Serialize)]
pub struct Frame {
    pub time: f64,
    pub ego: Box2,
    pub heading: f64,
    pub speed: f64,
    pub vehicles: Vec<Box2>,
    pub zones: Vec<Box2>,
    pub lanes: Vec<f64>,
    pub lane_width: f64,
    /// Sampled (x, y) polylines, one per candidate.
    pub candidates: Vec<Vec<(f64, f64)>>,
    pub selected: Option<usize>,
    pub iterations: usize,
    pub min_barrier: Option<f64>,
    pub collision: bool,
    pub fault: bool,
}

/// Closed-loop session advanced one planning cycle per call.
#[wasm_bindgen]
pub struct Simulation {
    config: ScenarioConfig,
    planner: Planner,
    traffic: Traffic,
    session: ClosedLoop,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, seed: u64, candidates: usize) -> Result<Simulation, JsError> {
        if !SCENARIOS.contains(&scenario) {
            return Err(JsError::new(&format!("unknown scenario `{scenario}`")));
        }
        let mut config = ScenarioConfig::resolve(scenario).map_err(js)?;
        config.seed = seed;
        if candidates > 0 {
            config.planner.delta_y = offsets_for(candidates);
        }
        config.validate().map_err(js)?;
        let planner = Planner::new(config.planner.clone()).map_err(js)?;
        let traffic = config.build_traffic().map_err(js)?;
        let session = ClosedLoop::new(&config, &traffic);
        Ok(Simulation { config, planner, traffic, session })
    }

    /// Advances one cycle and returns the frame as JSON.
    pub fn step(&mut self) -> String {
        let (row, outcome) = self.session.step(&self.planner, &mut self.traffic);
        let ego = self.session.ego;
        let vehicles = self
            .traffic
            .states()
            .iter()
            .map(|h| Box2 { id: h.id, x: h.x, y: h.y, length: h.length, width: h.width })
            .collect();
        let zones = self
            .config
            .construction
            .iter()
            .map(|z| Box2 {
                id: 0,
                x: (z.x_start + z.x_end) / 2.0,
                y: (z.y_min + z.y_max) / 2.0,
                length: z.x_end - z.x_start,
                width: z.y_max - z.y_min,
            })
            .collect();
        let candidates = outcome
            .as_ref()
            .map(|o| o.trajectories.iter().map(|t| t.x.iter().copied().zip(t.y.iter().copied()).collect()).collect())
            .unwrap_or_default();
        let frame = Frame {
            time: row.time,
            ego: Box2 { id: 0, x: ego.px, y: ego.py, length: self.config.ego.length, width: self.config.ego.width },
            heading: ego.heading,
            speed: ego.speed,
            vehicles,
            zones,
            lanes: self.config.road.lane_centers.clone(),
            lane_width: self.config.road.lane_width,
            candidates,
            selected: outcome.as_ref().map(|o| o.selection.index),
            iterations: row.iterations,
            min_barrier: row.min_barrier,
            collision: row.collision,
            fault: row.fault,
        };
        to_json(&frame)
    }
}

#[derive(Debug, Serialize)]
pub struct SpeedProfile {
    pub case: u8,
    pub peak_accel: f64,
    pub delta_px: f64,
    pub time: Vec<f64>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
}

/// Goal distance of a jerk-limited speed change, with the sampled speed and acceleration.
#[wasm_bindgen]
pub fn double_s(v0: f64, a0: f64, desired_speed: f64, jerk: f64, horizon: f64) -> Result<String, JsError> {
    let limits = KinematicLimits { desired_speed, jx_max: jerk, ..KinematicLimits::default() };
    let p = double_s_distance(v0, a0, &limits, horizon).map_err(js)?;
    let seg = p.segments;
    let ramp_in = if seg.ramp_in > 0.0 { (p.peak_accel - a0) / seg.ramp_in } else { 0.0 };
    let ramp_out = if seg.ramp_out > 0.0 { -p.peak_accel / seg.ramp_out } else { 0.0 };
    let phases = [(seg.ramp_in, ramp_in), (seg.hold, 0.0), (seg.ramp_out, ramp_out), (f64::INFINITY, 0.0)];
    let samples = 200;
    let dt = horizon / samples as f64;
    let (mut v, mut a) = (v0, a0);
    let mut out = SpeedProfile { case: p.case, peak_accel: p.peak_accel, delta_px: p.delta_px, time: vec![0.0], speed: vec![v], accel: vec![a] };
    for k in 1..=samples {
        let (t0, t1) = ((k - 1) as f64 * dt, k as f64 * dt);
        let mut start = 0.0;
        for (length, j) in phases {
            let (lo, hi) = (t0.max(start), t1.min(start + length));
            if hi > lo {
                let h = hi - lo;
                v += a * h + j * h * h / 2.0;
                a += j * h;
            }
            start += length;
        }
        out.time.push(t1);
        out.speed.push(v);
        out.accel.push(a);
    }
    Ok(to_json(&out))
}

#[derive(Debug, Serialize)]
pub struct RecoveryTrace {
    pub alpha: Vec<f64>,
    pub h: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub converging: bool,
}

/// Barrier values driven along the lower bound `(1 - alpha_k) h_{k-1}` plus a fixed margin.
#[wasm_bindgen]
pub fn barrier_recovery(h0: f64, alpha0: f64, steps: usize, margin: f64) -> Result<String, JsError> {
    let schedule = linear_schedule(alpha0, steps).map_err(js)?;
    let mut h = vec![h0];
    for k in 1..steps {
        let prev = h[k - 1];
        h.push(dcbf_bound(prev, schedule.alpha[k]) + margin);
    }
    let report = certify_recovery(&h, &schedule).map_err(js)?;
    let lyapunov = h.iter().map(|&v| lyapunov_value(v)).collect();
    Ok(to_json(&RecoveryTrace { alpha: schedule.alpha, h, lyapunov, converging: report.converging }))
}
