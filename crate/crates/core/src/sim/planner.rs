use crate::clock::Instant;

use serde::{Deserialize, Serialize};

use crate::admm::{assemble, solve, PositionBounds, SolverConfig, SolverResult};
use crate::barrier::{linear_schedule, BarrierSchedule, SafetyEllipse};
use crate::bezier::{build_basis, sample_trajectory, BasisMatrices, BezierSpec, SampledTrajectory};
use crate::error::{PlannerError, Result};
use crate::evaluator::{select, sub_costs, Candidate, EvaluationContext, EvaluationWeights, Selection};
use crate::goal_sampler::{generate_goals, GoalMatrix, GoalParams, GoalSafetyEllipse, KinematicLimits};
use crate::state::EgoState;
use crate::traffic::{nearest_hvs, predict_constant_velocity, HvState, PredictedTrack};

/// Everything one planning cycle needs besides the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub order: usize,
    pub steps: usize,
    /// Control period, also the sampling period of the horizon.
    pub dt: f64,
    pub delta_y: Vec<f64>,
    pub alpha0: f64,
    pub max_obstacles: usize,
    pub lateral_range: f64,
    pub barrier: SafetyEllipse,
    pub goal_ellipse: GoalSafetyEllipse,
    pub goal_decrement: f64,
    pub limits: KinematicLimits,
    pub x_bounds: (f64, f64),
    pub weights: EvaluationWeights,
    pub decay: f64,
    /// Move lateral goals onto the nearest lane center.
    pub snap_goals_to_lanes: bool,
    pub solver: SolverConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            order: 10,
            steps: 50,
            dt: 0.1,
            delta_y: vec![-6.0, -3.0, 0.0, 3.0, 6.0],
            alpha0: 0.2,
            max_obstacles: 5,
            lateral_range: 8.0,
            barrier: SafetyEllipse::default(),
            goal_ellipse: GoalSafetyEllipse::default(),
            goal_decrement: 2.0,
            limits: KinematicLimits::default(),
            x_bounds: PositionBounds::default().x,
            weights: EvaluationWeights::default(),
            decay: 0.97,
            snap_goals_to_lanes: false,
            solver: SolverConfig::default(),
        }
    }
}

/// `count` lateral offsets closest to zero from the sequence 0, -3, 3, -6, 6, ...
pub fn offsets_for(count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count)
        .map(|i| {
            let step = i.div_ceil(2) as f64 * 3.0;
            if i % 2 == 1 {
                -step
            } else {
                step
            }
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.limits.validate()?;
        self.weights.validate()?;
        if self.delta_y.is_empty() {
            return Err(PlannerError::Config("delta_y needs at least one offset".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(PlannerError::Config(format!("decay must lie in (0, 1], got {}", self.decay)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(PlannerError::Config(format!("alpha0 must lie in (0, 1], got {}", self.alpha0)));
        }
        if self.goal_decrement <= 0.0 || self.lateral_range <= 0.0 {
            return Err(PlannerError::Config("goal decrement and lateral range must be positive".into()));
        }
        SafetyEllipse::new(self.barrier.lx, self.barrier.ly)?;
        BezierSpec::with_period(self.order, self.steps, self.dt)?;
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

/// Per-cycle decision memory and road limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanContext {
    pub lane_centers: Vec<f64>,
    /// Lateral box on the trajectory.
    pub y_bounds: (f64, f64),
    /// Clip range for lateral goals, at most as wide as `y_bounds`.
    pub goal_y_bounds: (f64, f64),
    pub lateral_reference: f64,
    pub last_lane: usize,
    pub last_maneuver: i8,
}

#[derive(Debug, Clone)]
pub struct CycleOutcome {
    pub perceived: Vec<HvState>,
    pub predictions: Vec<PredictedTrack>,
    pub goals: GoalMatrix,
    pub result: SolverResult,
    pub trajectories: Vec<SampledTrajectory>,
    pub candidates: Vec<Candidate>,
    pub selection: Selection,
    pub solve_seconds: f64,
}

impl CycleOutcome {
    pub fn selected(&self) -> &SampledTrajectory {
        &self.trajectories[self.selection.index]
    }
}

#[derive(Debug, Clone)]
pub struct Planner {
    pub config: PlannerConfig,
    pub basis: BasisMatrices,
    pub schedule: BarrierSchedule,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        let spec = BezierSpec::with_period(config.order, config.steps, config.dt)?;
        Ok(Self { basis: build_basis(&spec)?, schedule: linear_schedule(config.alpha0, config.steps)?, config })
    }

    pub fn goal_params(&self, ctx: &PlanContext) -> GoalParams {
        let c = &self.config;
        GoalParams {
            delta_y: c.delta_y.clone(),
            y_bounds: ctx.goal_y_bounds,
            limits: c.limits,
            horizon: c.horizon(),
            dt: c.dt,
            decrement: c.goal_decrement,
            ellipse: c.goal_ellipse,
            lateral_reference: ctx.lateral_reference,
            snap_centers: if c.snap_goals_to_lanes { ctx.lane_centers.clone() } else { Vec::new() },
        }
    }

    /// Perceive, predict, sample goals, solve and select.
    pub fn plan(&self, ev: &EgoState, hvs: &[HvState], ctx: &PlanContext, warm: Option<&SolverResult>) -> Result<CycleOutcome> {
        let c = &self.config;
        let perceived = nearest_hvs(ev, hvs, c.max_obstacles, c.lateral_range);
        let predictions: Vec<PredictedTrack> =
            perceived.iter().map(|h| predict_constant_velocity(h, c.steps, c.dt)).collect();
        let goals = generate_goals(ev, &predictions, &self.goal_params(ctx))?;
        let bounds = PositionBounds { x: c.x_bounds, y: ctx.y_bounds };

        let start = Instant::now();
        let data = assemble(&goals, ev, &predictions, &self.basis, &c.limits, &bounds, &self.schedule, &c.barrier, &c.solver)?;
        let result = solve(&data, &c.solver, warm)?;
        let solve_seconds = start.elapsed().as_secs_f64();

        let trajectories = (0..goals.len())
            .map(|j| {
                sample_trajectory(
                    &result.c_x.column(j).into_owned(),
                    &result.c_y.column(j).into_owned(),
                    &result.c_theta.column(j).into_owned(),
                    &self.basis,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let eval = EvaluationContext {
            target_speed: c.limits.desired_speed,
            lane_centers: ctx.lane_centers.clone(),
            current_lane: crate::traffic::nearest_lane(ev.py, &ctx.lane_centers),
            last_lane: ctx.last_lane,
            last_maneuver: ctx.last_maneuver,
            decay: c.decay,
            obstacles: predictions.len(),
        };
        let candidates: Vec<Candidate> = trajectories
            .iter()
            .enumerate()
            .map(|(j, t)| sub_costs(t, goals.y[j], result.obstacle_residuals[j], &eval))
            .collect();
        let selection = select(&candidates, &c.weights, ctx.last_maneuver)?;
        Ok(CycleOutcome { perceived, predictions, goals, result, trajectories, candidates, selection, solve_seconds })
    }
}

/// Ego state at the first horizon sample of trajectory `index`.
pub fn apply_first_step(result: &SolverResult, index: usize, basis: &BasisMatrices) -> EgoState {
    sample_state(result, index, basis, 0)
}

/// Ego state at horizon sample `k` (0-based, i.e. time `(k+1) dt`).
pub fn sample_state(result: &SolverResult, index: usize, basis: &BasisMatrices, k: usize) -> EgoState {
    let dt = basis.spec.dt();
    let k = k.min(basis.steps() - 1);
    let cx = result.c_x.column(index);
    let cy = result.c_y.column(index);
    let ct = result.c_theta.column(index);
    let at = |m: &nalgebra::DMatrix<f64>, col: usize, c: &nalgebra::DVectorView<f64>| m.column(col).dot(c);
    let heading = at(&basis.position, k, &ct);
    let next_heading = if k + 1 < basis.steps() { at(&basis.position, k + 1, &ct) } else { heading };
    let vx = at(&basis.velocity, k, &cx);
    let vy = at(&basis.velocity, k, &cy);
    EgoState {
        px: at(&basis.position, k, &cx),
        py: at(&basis.position, k, &cy),
        heading,
        yaw_rate: (next_heading - heading) / dt,
        speed: vx.hypot(vy),
        ax: at(&basis.acceleration, k, &cx),
        ay: at(&basis.acceleration, k, &cy),
        jx: at(&basis.jerk, k, &cx),
        jy: at(&basis.jerk, k, &cy),
    }
}
