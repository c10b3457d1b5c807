use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Footprint, HvState};

pub const ACCEL_CEILING: f64 = 3.0;
pub const ACCEL_FLOOR: f64 = -4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub desired_speed: f64,
    pub time_headway: f64,
    pub min_gap: f64,
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { desired_speed: 15.0, time_headway: 1.5, min_gap: 2.0, max_accel: 1.5, comfort_decel: 2.0, exponent: 4.0 }
    }
}

/// Intelligent driver model acceleration, clamped to [-4, 3] m/s^2.
/// `leader` must be ahead of `follower` in the same lane.
pub fn idm_accel(follower: &HvState, leader: Option<&HvState>, params: &IdmParams) -> f64 {
    let v = follower.vx.max(0.0);
    let free = 1.0 - (v / params.desired_speed).powf(params.exponent);
    let interaction = match leader {
        None => 0.0,
        Some(l) => {
            let gap = l.x - follower.x - (l.length + follower.length) / 2.0;
            if gap <= 0.0 {
                return ACCEL_FLOOR;
            }
            let closing = v - l.vx;
            let desired_gap = params.min_gap
                + (v * params.time_headway + v * closing / (2.0 * (params.max_accel * params.comfort_decel).sqrt())).max(0.0);
            (desired_gap / gap).powi(2)
        }
    };
    (params.max_accel * (free - interaction)).clamp(ACCEL_FLOOR, ACCEL_CEILING)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdmVehicle {
    pub state: HvState,
    pub params: IdmParams,
}

/// Random population and recycling settings for synthetic traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdmSpawn {
    pub count: usize,
    /// Longitudinal placement window relative to the ego.
    pub window: (f64, f64),
    pub initial_speed: (f64, f64),
    pub desired_speed: (f64, f64),
    /// Lanes traffic may occupy (indices into the lane list).
    pub lanes: Vec<usize>,
    /// Minimum center spacing between vehicles placed in the same lane.
    pub min_spacing: f64,
    /// Keep-out half length around the ego at placement.
    pub ego_clearance: f64,
    pub recycle: bool,
    pub base: IdmParams,
}

impl Default for IdmSpawn {
    fn default() -> Self {
        Self {
            count: 18,
            window: (-50.0, 130.0),
            initial_speed: (7.0, 22.0),
            desired_speed: (7.0, 28.5),
            lanes: vec![0, 1, 2, 3, 4],
            min_spacing: 15.0,
            ego_clearance: 12.0,
            recycle: true,
            base: IdmParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IdmWorld {
    pub vehicles: Vec<IdmVehicle>,
    pub lane_centers: Vec<f64>,
    pub lane_width: f64,
    pub spawn: IdmSpawn,
    rng: ChaCha8Rng,
    next_id: u32,
}

impl IdmWorld {
    pub fn empty(lane_centers: Vec<f64>, lane_width: f64, spawn: IdmSpawn, seed: u64) -> Self {
        Self { vehicles: Vec::new(), lane_centers, lane_width, spawn, rng: ChaCha8Rng::seed_from_u64(seed), next_id: 1 }
    }

    /// Populate around an ego at `ego` with the spawn settings.
    pub fn populate(lane_centers: Vec<f64>, lane_width: f64, spawn: IdmSpawn, seed: u64, ego: (f64, f64)) -> Self {
        let mut world = Self::empty(lane_centers, lane_width, spawn, seed);
        let mut attempts = 0;
        while world.vehicles.len() < world.spawn.count && attempts < 10_000 {
            attempts += 1;
            let x = ego.0 + world.rng.random_range(world.spawn.window.0..world.spawn.window.1);
            let lane = world.pick_lane();
            if world.is_free(lane, x, world.spawn.min_spacing, Some(ego)) {
                let speed = world.rng.random_range(world.spawn.initial_speed.0..=world.spawn.initial_speed.1);
                world.insert(lane, x, speed);
            }
        }
        world
    }

    pub fn add_vehicle(&mut self, lane: usize, x: f64, speed: f64, params: IdmParams) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        let state = HvState::new(id, x, self.lane_centers[lane], speed, lane);
        self.vehicles.push(IdmVehicle { state, params });
        id
    }

    fn pick_lane(&mut self) -> usize {
        let i = self.rng.random_range(0..self.spawn.lanes.len());
        self.spawn.lanes[i]
    }

    fn insert(&mut self, lane: usize, x: f64, speed: f64) {
        let desired = self.rng.random_range(self.spawn.desired_speed.0..=self.spawn.desired_speed.1);
        let params = IdmParams { desired_speed: desired, ..self.spawn.base };
        self.add_vehicle(lane, x, speed, params);
    }

    fn is_free(&self, lane: usize, x: f64, spacing: f64, ego: Option<(f64, f64)>) -> bool {
        let clear_of_traffic = self
            .vehicles
            .iter()
            .all(|v| v.state.lane != lane || (v.state.x - x).abs() >= spacing);
        let clear_of_ego = ego.is_none_or(|(ex, _)| (x - ex).abs() >= self.spawn.ego_clearance);
        clear_of_traffic && clear_of_ego
    }

    pub fn states(&self) -> Vec<HvState> {
        self.vehicles.iter().map(|v| v.state).collect()
    }

    /// Lanes the ego footprint currently occupies.
    fn ego_lanes(&self, ego: &Footprint) -> Vec<usize> {
        let reach = (self.lane_width + ego.width) / 2.0;
        (0..self.lane_centers.len())
            .filter(|&l| (ego.y - self.lane_centers[l]).abs() < reach)
            .collect()
    }

    /// Advance all vehicles by `dt`. `ego` is the ego footprint and longitudinal speed;
    /// vehicles behind it in an occupied lane follow it.
    pub fn step(&mut self, dt: f64, ego: Option<(&Footprint, f64)>) {
        let ego_lanes = ego.map(|(e, _)| self.ego_lanes(e)).unwrap_or_default();
        let ego_as_hv = ego.map(|(e, speed)| HvState {
            id: 0,
            x: e.x,
            y: e.y,
            vx: speed,
            vy: 0.0,
            lane: usize::MAX,
            length: e.length,
            width: e.width,
        });
        let accels: Vec<f64> = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut leader: Option<HvState> = None;
                for (j, other) in self.vehicles.iter().enumerate() {
                    if j != i && other.state.lane == v.state.lane && other.state.x > v.state.x {
                        if leader.is_none_or(|l| other.state.x < l.x) {
                            leader = Some(other.state);
                        }
                    }
                }
                if let Some(e) = ego_as_hv {
                    if ego_lanes.contains(&v.state.lane) && e.x > v.state.x && leader.is_none_or(|l| e.x < l.x) {
                        leader = Some(e);
                    }
                }
                idm_accel(&v.state, leader.as_ref(), &v.params)
            })
            .collect();
        for (v, a) in self.vehicles.iter_mut().zip(accels) {
            // semi-implicit Euler: speed first, then position with the new speed
            v.state.vx = (v.state.vx + a * dt).max(0.0);
            v.state.x += v.state.vx * dt;
        }
        if self.spawn.recycle {
            if let Some((e, _)) = ego {
                self.recycle(e.x);
            }
        }
    }

    fn recycle(&mut self, ego_x: f64) {
        let behind = ego_x + self.spawn.window.0;
        for i in 0..self.vehicles.len() {
            if self.vehicles[i].state.x >= behind {
                continue;
            }
            let ahead = ego_x + self.spawn.window.1;
            // a vehicle that finds no free slot is retried on the next step
            for _ in 0..20 {
                let lane = self.pick_lane();
                if self.is_free(lane, ahead, self.spawn.min_spacing, None) {
                    let speed = self.rng.random_range(self.spawn.initial_speed.0..=self.spawn.initial_speed.1);
                    let desired = self.rng.random_range(self.spawn.desired_speed.0..=self.spawn.desired_speed.1);
                    let id = self.next_id;
                    self.next_id += 1;
                    let v = &mut self.vehicles[i];
                    v.state = HvState::new(id, ahead, self.lane_centers[lane], speed, lane);
                    v.params.desired_speed = desired;
                    break;
                }
            }
        }
    }
}

/// Advance a world one period without an ego participant.
pub fn step_idm_world(mut world: IdmWorld, dt: f64) -> IdmWorld {
    world.step(dt, None);
    world
}
