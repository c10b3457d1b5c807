//! Per-cycle goal points: lateral offsets around the last chosen lane and a
//! jerk-limited longitudinal reach, pulled back behind predicted traffic.

use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};
use crate::state::EgoState;
use crate::traffic::PredictedTrack;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub desired_speed: f64,
    pub ax_max: f64,
    pub ax_min: f64,
    pub jx_max: f64,
    pub ay_max: f64,
    pub ay_min: f64,
    pub jy_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self { desired_speed: 15.0, ax_max: 3.0, ax_min: -4.0, jx_max: 0.9, ay_max: 2.0, ay_min: -2.0, jy_max: 0.6 }
    }
}

impl KinematicLimits {
    pub fn jx_min(&self) -> f64 {
        -self.jx_max
    }

    pub fn jy_min(&self) -> f64 {
        -self.jy_max
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.ax_min < 0.0
            && self.ax_max > 0.0
            && self.ay_min < 0.0
            && self.ay_max > 0.0
            && self.jx_max > 0.0
            && self.jy_max > 0.0
            && self.desired_speed >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(PlannerError::Config(format!("inconsistent kinematic limits: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSafetyEllipse {
    pub a: f64,
    pub b: f64,
}

impl Default for GoalSafetyEllipse {
    fn default() -> Self {
        Self { a: 5.5, b: 4.0 }
    }
}

pub fn lateral_goals(last_lateral: f64, delta_y: &[f64], bounds: (f64, f64)) -> Vec<f64> {
    delta_y.iter().map(|dy| (last_lateral + dy).clamp(bounds.0, bounds.1)).collect()
}

/// Durations of the jerk-limited speed change followed by cruise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSSegments {
    /// Jerk phase taking the initial acceleration to the peak.
    pub ramp_in: f64,
    /// Constant-acceleration hold at the saturated peak (zero in case 1).
    pub hold: f64,
    /// Jerk phase bringing the acceleration back to zero.
    pub ramp_out: f64,
    /// Remaining time at the desired speed.
    pub cruise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSProfile {
    /// 1 when the peak acceleration stays inside the limits, 2 when it saturates.
    pub case: u8,
    pub peak_accel: f64,
    pub delta_px: f64,
    pub segments: DoubleSSegments,
}

/// Exact position, velocity and acceleration after `t` seconds of constant jerk.
fn advance(state: (f64, f64, f64), jerk: f64, t: f64) -> (f64, f64, f64) {
    let (p, v, a) = state;
    (
        p + v * t + a * t * t / 2.0 + jerk * t * t * t / 6.0,
        v + a * t + jerk * t * t / 2.0,
        a + jerk * t,
    )
}

/// Displacement over `horizon` of a jerk-limited transition from `(v0, a0)` to the desired speed.
pub fn double_s_distance(v0: f64, a0: f64, limits: &KinematicLimits, horizon: f64) -> Result<DoubleSProfile> {
    if !(horizon > 0.0) {
        return Err(PlannerError::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !v0.is_finite() || !a0.is_finite() {
        return Err(PlannerError::NonFinite("double-S initial state"));
    }
    limits.validate()?;
    let j = limits.jx_max;
    let a0 = a0.clamp(limits.ax_min, limits.ax_max);
    let dv = limits.desired_speed - v0;

    // Speed reached if the current acceleration is ramped straight to zero.
    let accelerate = dv >= a0 * a0.abs() / (2.0 * j);
    let (mut peak, sign) = if accelerate {
        (((2.0 * dv * j + a0 * a0) / 2.0).max(0.0).sqrt(), 1.0)
    } else {
        (-((a0 * a0 - 2.0 * dv * j) / 2.0).max(0.0).sqrt(), -1.0)
    };
    let mut case = 1;
    let mut hold = 0.0;
    let cap = if accelerate { limits.ax_max } else { limits.ax_min };
    if peak.abs() > cap.abs() {
        case = 2;
        peak = cap;
        let dv_in = sign * (peak * peak - a0 * a0) / (2.0 * j);
        let dv_out = sign * peak * peak / (2.0 * j);
        hold = ((dv - dv_in - dv_out) / peak).max(0.0);
    }
    let ramp_in = (peak - a0).abs() / j;
    let ramp_out = peak.abs() / j;
    let cruise = (horizon - ramp_in - hold - ramp_out).max(0.0);

    let jerk_in = if peak >= a0 { j } else { -j };
    let jerk_out = -sign * j;
    let pieces = [(ramp_in, jerk_in), (hold, 0.0), (ramp_out, jerk_out), (cruise, 0.0)];
    let mut state = (0.0, v0, a0);
    let mut remaining = horizon;
    for (i, (dur, jerk)) in pieces.into_iter().enumerate() {
        let t = dur.min(remaining);
        state = advance(state, jerk, t);
        remaining -= t;
        if i == 2 && t == dur {
            // the ramp lands exactly on zero acceleration and the desired speed
            state.2 = 0.0;
            state.1 = limits.desired_speed;
        }
        if remaining <= 0.0 {
            break;
        }
    }
    Ok(DoubleSProfile {
        case,
        peak_accel: peak,
        delta_px: state.0,
        segments: DoubleSSegments { ramp_in, hold, ramp_out, cruise },
    })
}

pub fn longitudinal_goals(px: f64, delta_px: &[f64]) -> Vec<f64> {
    delta_px.iter().map(|d| px + d).collect()
}

/// `(dx/a)^2 + (dy/b)^2 - 1` against each HV endpoint; non-negative means safe.
pub fn safety_check(goal: (f64, f64), hv_endpoints: &[(f64, f64)], ellipse: &GoalSafetyEllipse) -> Vec<f64> {
    hv_endpoints
        .iter()
        .map(|&(ox, oy)| ((goal.0 - ox) / ellipse.a).powi(2) + ((goal.1 - oy) / ellipse.b).powi(2) - 1.0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalParams {
    pub delta_y: Vec<f64>,
    pub y_bounds: (f64, f64),
    pub limits: KinematicLimits,
    pub horizon: f64,
    pub dt: f64,
    /// Backoff applied to an unsafe longitudinal goal per check.
    pub decrement: f64,
    pub ellipse: GoalSafetyEllipse,
    /// Lateral position the offsets are applied to, normally the last chosen lane center.
    pub lateral_reference: f64,
    /// When non-empty, each lateral goal moves to the nearest of these centers inside `y_bounds`.
    #[serde(default)]
    pub snap_centers: Vec<f64>,
}

impl Default for GoalParams {
    fn default() -> Self {
        Self {
            delta_y: vec![-6.0, -3.0, 0.0, 3.0, 6.0],
            y_bounds: (-8.0, 8.0),
            limits: KinematicLimits::default(),
            horizon: 5.0,
            dt: 0.1,
            decrement: 2.0,
            ellipse: GoalSafetyEllipse::default(),
            lateral_reference: 0.0,
            snap_centers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalMatrix {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Goal is still unsafe after reaching the backoff floor.
    pub degraded: Vec<bool>,
    pub profile: DoubleSProfile,
}

impl GoalMatrix {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// True if the goal sits inside the check ellipse of the endpoint, or beyond
/// the endpoint within half the lateral axis (reaching it would pass through the HV).
fn goal_blocked(goal: (f64, f64), endpoint: (f64, f64), ellipse: &GoalSafetyEllipse) -> bool {
    let inside = safety_check(goal, &[endpoint], ellipse)[0] < 0.0;
    let beyond = (goal.1 - endpoint.1).abs() < ellipse.b / 2.0 && goal.0 > endpoint.0;
    inside || beyond
}

pub fn generate_goals(ev: &EgoState, predictions: &[PredictedTrack], params: &GoalParams) -> Result<GoalMatrix> {
    if params.decrement <= 0.0 {
        return Err(PlannerError::Config(format!("goal decrement must be positive, got {}", params.decrement)));
    }
    let mut y = lateral_goals(params.lateral_reference, &params.delta_y, params.y_bounds);
    let (lo, hi) = params.y_bounds;
    let open: Vec<f64> = params.snap_centers.iter().copied().filter(|c| (lo..=hi).contains(c)).collect();
    if !open.is_empty() {
        for v in &mut y {
            *v = open[crate::traffic::nearest_lane(*v, &open)];
        }
    }
    let profile = double_s_distance(ev.vx().max(0.0), ev.ax, &params.limits, params.horizon)?;
    let mut x = longitudinal_goals(ev.px, &vec![profile.delta_px; y.len()]);
    let floor = ev.px + ev.vx().max(0.0) * params.dt;

    // Only vehicles currently ahead constrain the goal; those behind are responsible for the gap.
    let endpoints: Vec<(f64, f64)> = predictions
        .iter()
        .filter(|p| p.current.0 > ev.px)
        .filter_map(|p| p.positions.last().copied())
        .collect();

    let mut degraded = vec![false; y.len()];
    for j in 0..y.len() {
        loop {
            let unsafe_now = endpoints.iter().any(|&e| goal_blocked((x[j], y[j]), e, &params.ellipse));
            if !unsafe_now {
                break;
            }
            if x[j] <= floor {
                degraded[j] = true;
                break;
            }
            x[j] = (x[j] - params.decrement).max(floor);
        }
    }
    Ok(GoalMatrix { x, y, degraded, profile })
}
