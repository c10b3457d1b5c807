use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::planner::PlannerConfig;
use crate::error::{PlannerError, Result};
use crate::state::EgoState;
use crate::traffic::{
    load_recorded_csv, nearest_lane, Footprint, HvState, IdmSpawn, IdmWorld, RecordedSample, RecordedTrack, ReplayWorld,
    DEFAULT_LENGTH, DEFAULT_WIDTH,
};

/// Ids at and above this value are reserved for static and scripted obstacles.
pub const STATIC_ID_BASE: u32 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadConfig {
    pub lane_centers: Vec<f64>,
    pub lane_width: f64,
    pub y_bounds: (f64, f64),
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self { lane_centers: vec![-7.5, -3.75, 0.0, 3.75, 7.5], lane_width: 3.75, y_bounds: (-8.0, 8.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoInit {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for EgoInit {
    fn default() -> Self {
        Self { x: 0.0, y: 0.0, speed: 15.0, length: DEFAULT_LENGTH, width: DEFAULT_WIDTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficSource {
    None,
    Idm,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplayConfig {
    /// Recorded-traffic CSV; relative paths resolve against the scenario file.
    pub path: PathBuf,
    pub frame_period: f64,
    /// Recording time aligned with the start of the run.
    pub start_time: f64,
    /// Shift applied to recorded positions.
    pub offset: (f64, f64),
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self { path: PathBuf::from("recorded_traffic.csv"), frame_period: 0.1, start_time: 0.0, offset: (0.0, 0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub source: TrafficSource,
    pub idm: IdmSpawn,
    pub replay: ReplayConfig,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { source: TrafficSource::None, idm: IdmSpawn::default(), replay: ReplayConfig::default() }
    }
}

/// A constant-acceleration phase of a scripted vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedChange {
    pub start: f64,
    pub duration: f64,
    pub accel: f64,
}

/// Smooth lateral move to `to_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    pub to_y: f64,
    pub start: f64,
    pub duration: f64,
}

/// Open-loop vehicle following a scripted plan. `x` is relative to the ego start, `y` is absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedVehicle {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    #[serde(default)]
    pub lane_change: Option<LaneChange>,
    #[serde(default)]
    pub speed_changes: Vec<SpeedChange>,
}

impl ScriptedVehicle {
    /// Sampled track over `[0, duration]` at period `dt`.
    pub fn track(&self, ego_x: f64, duration: f64, dt: f64) -> RecordedTrack {
        let steps = (duration / dt).ceil() as usize + 1;
        let mut x = ego_x + self.x;
        let mut v = self.speed;
        let mut samples = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * dt;
            let y = match self.lane_change {
                Some(lc) => {
                    let s = ((t - lc.start) / lc.duration).clamp(0.0, 1.0);
                    // quintic smoothstep keeps lateral speed and acceleration continuous
                    let blend = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
                    self.y + (lc.to_y - self.y) * blend
                }
                None => self.y,
            };
            samples.push(RecordedSample { time: t, x, y, speed: v });
            let a: f64 = self
                .speed_changes
                .iter()
                .filter(|c| t >= c.start - 1e-9 && t < c.start + c.duration - 1e-9)
                .map(|c| c.accel)
                .sum();
            v = (v + a * dt).max(0.0);
            x += v * dt;
        }
        RecordedTrack { id: self.id, samples }
    }
}

/// Rectangular blocked region modeled by a fence of static obstacles on its centerline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionZone {
    pub x_start: f64,
    pub x_end: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Spacing of the fence obstacles.
    #[serde(default = "default_fence_spacing")]
    pub spacing: f64,
    /// Distance ahead of the zone at which the lateral bound starts to tighten.
    #[serde(default = "default_lookahead")]
    pub lookahead: f64,
}

fn default_fence_spacing() -> f64 {
    5.0
}

fn default_lookahead() -> f64 {
    200.0
}

impl ConstructionZone {
    pub fn footprint(&self) -> Footprint {
        Footprint {
            x: (self.x_start + self.x_end) / 2.0,
            y: (self.y_min + self.y_max) / 2.0,
            length: self.x_end - self.x_start,
            width: self.y_max - self.y_min,
        }
    }

    pub fn fence(&self, first_id: u32) -> Vec<HvState> {
        let count = ((self.x_end - self.x_start) / self.spacing).floor() as usize + 1;
        let y = (self.y_min + self.y_max) / 2.0;
        (0..count)
            .map(|i| {
                let mut hv = HvState::new(first_id + i as u32, self.x_start + i as f64 * self.spacing, y, 0.0, usize::MAX);
                hv.length = self.spacing.min(DEFAULT_LENGTH);
                hv.width = self.y_max - self.y_min;
                hv
            })
            .collect()
    }

    /// Lateral bounds while approaching or passing the zone. The bound moves to the
    /// roomier side of the zone but never past the ego's current position.
    pub fn tighten(&self, bounds: (f64, f64), ego: &EgoState, half_width: f64) -> (f64, f64) {
        if ego.px > self.x_end || self.x_start - ego.px > self.lookahead {
            return bounds;
        }
        let room_below = self.y_min - bounds.0;
        let room_above = bounds.1 - self.y_max;
        if room_below >= room_above {
            let edge = (self.y_min - half_width).max(ego.py);
            (bounds.0, bounds.1.min(edge))
        } else {
            let edge = (self.y_max + half_width).min(ego.py);
            (bounds.0.max(edge), bounds.1)
        }
    }

    /// Clip range for lateral goals: the open side of the zone, whatever the ego's position.
    pub fn goal_bounds(&self, bounds: (f64, f64), ego: &EgoState, half_width: f64) -> (f64, f64) {
        if ego.px > self.x_end || self.x_start - ego.px > self.lookahead {
            return bounds;
        }
        if self.y_min - bounds.0 >= bounds.1 - self.y_max {
            (bounds.0, bounds.1.min(self.y_min - half_width))
        } else {
            (bounds.0.max(self.y_max + half_width), bounds.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub duration_s: f64,
    pub road: RoadConfig,
    pub ego: EgoInit,
    pub planner: PlannerConfig,
    pub traffic: TrafficConfig,
    pub scripted: Vec<ScriptedVehicle>,
    pub construction: Vec<ConstructionZone>,
    /// Fraction of failed cycles above which a run counts as a runtime fault.
    pub max_fault_rate: f64,
    /// Directory used to resolve relative paths, set when loading from a file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "empty_road".into(),
            seed: 0,
            duration_s: 10.0,
            road: RoadConfig::default(),
            ego: EgoInit::default(),
            planner: PlannerConfig::default(),
            traffic: TrafficConfig::default(),
            scripted: Vec::new(),
            construction: Vec::new(),
            max_fault_rate: 0.1,
            base_dir: None,
        }
    }
}

const BUILTIN: [(&str, &str); 5] = [
    ("idm_cruise", include_str!("../../scenarios/idm_cruise.toml")),
    ("construction", include_str!("../../scenarios/construction.toml")),
    ("cut_in", include_str!("../../scenarios/cut_in.toml")),
    ("static_obstacle", include_str!("../../scenarios/static_obstacle.toml")),
    ("replay", include_str!("../../scenarios/replay.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PlannerError::Config(format!("{origin}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PlannerError::Io { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// A scenario file path, or the name of a bundled scenario.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        let path = Path::new(name_or_path);
        if path.is_file() {
            return Self::load(path);
        }
        match BUILTIN.iter().find(|(n, _)| *n == name_or_path) {
            Some((n, text)) => {
                let mut cfg = Self::from_toml(text, n)?;
                cfg.base_dir = Some(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios")));
                Ok(cfg)
            }
            None => Err(PlannerError::Config(format!(
                "scenario `{name_or_path}` is neither a file nor one of {:?}",
                builtin_names()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        if self.road.lane_centers.is_empty() || self.road.lane_width <= 0.0 {
            return Err(PlannerError::Config("road needs at least one lane and a positive width".into()));
        }
        if !(self.road.y_bounds.0 < self.road.y_bounds.1) {
            return Err(PlannerError::Config("lateral bounds are empty".into()));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(PlannerError::Config(format!("duration must be positive, got {}", self.duration_s)));
        }
        if !(self.ego.speed >= 0.0) || !self.ego.x.is_finite() || !self.ego.y.is_finite() {
            return Err(PlannerError::Config("invalid ego initial state".into()));
        }
        if self.traffic.source == TrafficSource::Idm {
            let s = &self.traffic.idm;
            if s.lanes.iter().any(|&l| l >= self.road.lane_centers.len()) {
                return Err(PlannerError::Config("IDM spawn lane index out of range".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.max_fault_rate) {
            return Err(PlannerError::Config("max_fault_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_s / self.planner.dt).round() as usize
    }

    pub fn initial_ego(&self) -> EgoState {
        EgoState::cruising(self.ego.x, self.ego.y, self.ego.speed)
    }

    fn replay_path(&self) -> PathBuf {
        let p = &self.traffic.replay.path;
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        }
    }

    pub fn build_traffic(&self) -> Result<Traffic> {
        let ego = (self.ego.x, self.ego.y);
        let idm = match self.traffic.source {
            TrafficSource::Idm => Some(IdmWorld::populate(
                self.road.lane_centers.clone(),
                self.road.lane_width,
                self.traffic.idm.clone(),
                self.seed,
                ego,
            )),
            _ => None,
        };
        let mut tracks = Vec::new();
        if self.traffic.source == TrafficSource::Replay {
            let r = &self.traffic.replay;
            for mut t in load_recorded_csv(&self.replay_path(), r.frame_period)? {
                for s in &mut t.samples {
                    s.time -= r.start_time;
                    s.x += r.offset.0;
                    s.y += r.offset.1;
                }
                tracks.push(t);
            }
        }
        for v in &self.scripted {
            tracks.push(v.track(self.ego.x, self.duration_s + self.planner.dt, self.planner.dt));
        }
        let replay = (!tracks.is_empty()).then(|| ReplayWorld::new(tracks, self.road.lane_centers.clone(), 0.0));
        let mut statics = Vec::new();
        for (i, zone) in self.construction.iter().enumerate() {
            statics.extend(zone.fence(STATIC_ID_BASE + 1000 * i as u32));
        }
        Ok(Traffic { idm, replay, statics, zones: self.construction.clone(), lane_centers: self.road.lane_centers.clone() })
    }
}

/// Combined traffic sources of a run.
#[derive(Debug, Clone)]
pub struct Traffic {
    pub idm: Option<IdmWorld>,
    pub replay: Option<ReplayWorld>,
    pub statics: Vec<HvState>,
    pub zones: Vec<ConstructionZone>,
    pub lane_centers: Vec<f64>,
}

impl Traffic {
    /// Moving and static vehicles, in a stable order.
    pub fn states(&self) -> Vec<HvState> {
        let mut out = Vec::new();
        if let Some(w) = &self.idm {
            out.extend(w.states());
        }
        if let Some(r) = &self.replay {
            out.extend(r.states());
        }
        out.extend(self.statics.iter().copied());
        out
    }

    /// Footprints used by the collision monitor: vehicles and zone rectangles (not the fence).
    pub fn footprints(&self) -> Vec<(u32, Footprint)> {
        let mut out: Vec<(u32, Footprint)> = Vec::new();
        if let Some(w) = &self.idm {
            out.extend(w.states().iter().map(|h| (h.id, Footprint::of_hv(h))));
        }
        if let Some(r) = &self.replay {
            out.extend(r.states().iter().map(|h| (h.id, Footprint::of_hv(h))));
        }
        out.extend(self.zones.iter().enumerate().map(|(i, z)| (STATIC_ID_BASE + 1000 * i as u32, z.footprint())));
        out
    }

    pub fn step(&mut self, dt: f64, ego: &EgoState, ego_size: (f64, f64)) {
        let fp = Footprint { x: ego.px, y: ego.py, length: ego_size.0, width: ego_size.1 };
        if let Some(w) = &mut self.idm {
            w.step(dt, Some((&fp, ego.vx())));
        }
        if let Some(r) = &mut self.replay {
            r.step(dt);
        }
    }

    pub fn lane_of(&self, y: f64) -> usize {
        nearest_lane(y, &self.lane_centers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in builtin_names() {
            ScenarioConfig::resolve(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_scenario_is_a_config_error() {
        assert!(matches!(ScenarioConfig::resolve("no_such_thing"), Err(PlannerError::Config(_))));
    }

    #[test]
    fn scripted_lane_change_lands() {
        let v = ScriptedVehicle {
            id: 7,
            x: 10.0,
            y: 0.0,
            speed: 10.0,
            lane_change: Some(LaneChange { to_y: 4.0, start: 1.0, duration: 2.0 }),
            speed_changes: vec![SpeedChange { start: 0.0, duration: 1.0, accel: -2.0 }],
        };
        let t = v.track(0.0, 5.0, 0.1);
        let (_, y0, _, _) = t.at(0.5).unwrap();
        let (_, y1, _, _) = t.at(3.5).unwrap();
        assert!(y0.abs() < 1e-12 && (y1 - 4.0).abs() < 1e-12);
        assert!((t.samples.last().unwrap().speed - 8.0).abs() < 1e-9);
    }

    #[test]
    fn zone_bound_tightening() {
        let z = ConstructionZone { x_start: 150.0, x_end: 300.0, y_min: 1.875, y_max: 9.375, spacing: 5.0, lookahead: 200.0 };
        let far = EgoState::cruising(-100.0, 0.0, 15.0);
        assert_eq!(z.tighten((-8.0, 8.0), &far, 0.9), (-8.0, 8.0));
        let near = EgoState::cruising(0.0, 0.0, 15.0);
        let b = z.tighten((-8.0, 8.0), &near, 0.9);
        assert!((b.1 - 0.975).abs() < 1e-12);
        let inside = EgoState::cruising(0.0, 5.0, 15.0);
        assert_eq!(z.tighten((-8.0, 8.0), &inside, 0.9).1, 5.0);
        assert_eq!(z.fence(1).len(), 31);
    }
}
