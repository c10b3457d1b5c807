//! Surrounding traffic: synthetic car-following, recorded replay, prediction and perception.

mod idm;
mod replay;

pub use idm::{idm_accel, step_idm_world, IdmParams, IdmSpawn, IdmVehicle, IdmWorld};
pub use replay::{load_recorded_csv, parse_recorded_csv, write_recorded_csv, RecordedSample, RecordedTrack, ReplayWorld};

use serde::{Deserialize, Serialize};

use crate::state::EgoState;

pub const DEFAULT_LENGTH: f64 = 4.5;
pub const DEFAULT_WIDTH: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvState {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub lane: usize,
    pub length: f64,
    pub width: f64,
}

impl HvState {
    pub fn new(id: u32, x: f64, y: f64, speed: f64, lane: usize) -> Self {
        Self { id, x, y, vx: speed, vy: 0.0, lane, length: DEFAULT_LENGTH, width: DEFAULT_WIDTH }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Predicted motion of one HV over the planning horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedTrack {
    pub id: u32,
    pub current: (f64, f64),
    pub velocity: (f64, f64),
    /// Positions at `k*dt` for `k = 1..N`.
    pub positions: Vec<(f64, f64)>,
}

pub fn predict_constant_velocity(hv: &HvState, steps: usize, dt: f64) -> PredictedTrack {
    let positions = (1..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            (hv.x + t * hv.vx, hv.y + t * hv.vy)
        })
        .collect();
    PredictedTrack { id: hv.id, current: hv.position(), velocity: (hv.vx, hv.vy), positions }
}

/// Up to `count` HVs within `lateral_range` of the ego, nearest first, ties by id.
pub fn nearest_hvs(ev: &EgoState, hvs: &[HvState], count: usize, lateral_range: f64) -> Vec<HvState> {
    let mut candidates: Vec<(f64, HvState)> = hvs
        .iter()
        .filter(|h| (h.y - ev.py).abs() <= lateral_range)
        .map(|h| ((h.x - ev.px).hypot(h.y - ev.py), *h))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    candidates.into_iter().take(count).map(|(_, h)| h).collect()
}

/// Index of the lane center closest to `y`.
pub fn nearest_lane(y: f64, lane_centers: &[f64]) -> usize {
    lane_centers
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - y).abs().total_cmp(&(b.1 - y).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Axis-aligned rectangle, center plus full length and width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn of_hv(h: &HvState) -> Self {
        Self { x: h.x, y: h.y, length: h.length, width: h.width }
    }

    pub fn overlaps(&self, other: &Footprint) -> bool {
        (self.x - other.x).abs() < (self.length + other.length) / 2.0
            && (self.y - other.y).abs() < (self.width + other.width) / 2.0
    }
}
