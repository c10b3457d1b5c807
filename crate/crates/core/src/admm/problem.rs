use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barrier::{ellipse_coords, BarrierSchedule, SafetyEllipse};
use crate::bezier::{basis_row, BasisMatrices};
use crate::error::{PlannerError, Result};
use crate::goal_sampler::{GoalMatrix, KinematicLimits};
use crate::state::EgoState;
use crate::traffic::PredictedTrack;

use super::SolverConfig;

/// Penalty weights of the augmented Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub obs_x: f64,
    pub obs_y: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Self { theta: 5.0, x: 5.0, y: 5.0, obs_x: 5.0, obs_y: 5.0 }
    }
}

/// Scalar weights of the smoothness matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessWeights {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

impl Default for SmoothnessWeights {
    fn default() -> Self {
        Self { theta: 200.0, x: 100.0, y: 100.0 }
    }
}

/// Position box of the ego, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for PositionBounds {
    fn default() -> Self {
        Self { x: (-500.0, 1000.0), y: (-8.0, 8.0) }
    }
}

/// Matrices of one planning cycle. Longitudinal quantities are expressed
/// relative to `x_origin` (the ego position at assembly time).
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub order: usize,
    pub steps: usize,
    pub trajectories: usize,
    pub obstacles: usize,
    pub x_origin: f64,
    /// Sampled basis transposes, `N x (n+1)`: position, velocity, acceleration, jerk.
    pub sample_pos: DMatrix<f64>,
    pub sample_vel: DMatrix<f64>,
    pub sample_acc: DMatrix<f64>,
    pub sample_jerk: DMatrix<f64>,
    /// Inequality stack `[S0; -S0; S2; -S2; S3; -S3]`, `6N x (n+1)`.
    pub g: DMatrix<f64>,
    pub hx: DMatrix<f64>,
    pub hy: DMatrix<f64>,
    /// Initial rows (position and first derivative at the curve start), `2 x (n+1)`.
    pub initial_rows: DMatrix<f64>,
    /// Terminal heading rows, `2 x (n+1)`.
    pub terminal_rows: DMatrix<f64>,
    /// Terminal position row, `1 x (n+1)`.
    pub goal_row: DMatrix<f64>,
    pub init_theta: DMatrix<f64>,
    pub init_x: DMatrix<f64>,
    pub init_y: DMatrix<f64>,
    pub goal_x: DMatrix<f64>,
    pub goal_y: DMatrix<f64>,
    /// Obstacle stacks, row `m*N + k`, `(N*M) x N_c`.
    pub ox: DMatrix<f64>,
    pub oy: DMatrix<f64>,
    pub lx: DMatrix<f64>,
    pub ly: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    /// Ellipse scaling of each obstacle at the current (measured) instant.
    pub measured_d: Vec<f64>,
    pub obstacle_ids: Vec<u32>,
    pub q_theta: DMatrix<f64>,
    pub q_x: DMatrix<f64>,
    pub q_y: DMatrix<f64>,
    pub rho: Penalties,
}

impl ProblemData {
    pub fn row(&self, obstacle: usize, step: usize) -> usize {
        obstacle * self.steps + step
    }

    /// `V_w C`: sampled positions repeated per obstacle.
    pub fn stack_positions(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let p = &self.sample_pos * c;
        let mut out = DMatrix::zeros(self.steps * self.obstacles, c.ncols());
        for m in 0..self.obstacles {
            out.rows_mut(m * self.steps, self.steps).copy_from(&p);
        }
        out
    }

    /// `V_w^T v`.
    pub fn unstack_transpose(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.steps, v.ncols());
        for m in 0..self.obstacles {
            acc += v.rows(m * self.steps, self.steps);
        }
        self.sample_pos.transpose() * acc
    }
}

fn smoothness(basis: &BasisMatrices, weight: f64) -> DMatrix<f64> {
    let dt = basis.spec.dt();
    let n = basis.order() + 1;
    // acceleration energy plus a small ridge that makes the matrix definite
    let acc = &basis.acceleration;
    (acc * acc.transpose() * dt + DMatrix::identity(n, n) * 1e-6) * weight
}

fn box_rhs(steps: usize, cols: usize, pos: (f64, f64), acc: (f64, f64), jerk: (f64, f64)) -> DMatrix<f64> {
    let blocks = [pos.1, -pos.0, acc.1, -acc.0, jerk.1, -jerk.0];
    DMatrix::from_fn(6 * steps, cols, |r, _| blocks[r / steps])
}

fn replicate(values: &[f64], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(values.len(), cols, |r, _| values[r])
}

/// Build the cycle's problem from goals, the measured ego state and HV predictions.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    goals: &GoalMatrix,
    ev: &EgoState,
    predictions: &[PredictedTrack],
    basis: &BasisMatrices,
    limits: &KinematicLimits,
    bounds: &PositionBounds,
    schedule: &BarrierSchedule,
    ellipse: &SafetyEllipse,
    config: &SolverConfig,
) -> Result<ProblemData> {
    let spec = basis.spec;
    let (n1, steps) = (spec.order + 1, spec.steps);
    let nc = goals.len();
    if nc == 0 {
        return Err(PlannerError::Shape("goal matrix has no columns".into()));
    }
    if schedule.len() != steps {
        return Err(PlannerError::Shape(format!("schedule has {} entries, horizon {steps}", schedule.len())));
    }
    for p in predictions {
        if p.positions.len() != steps {
            return Err(PlannerError::Shape(format!(
                "prediction for HV {} has {} steps, horizon {steps}",
                p.id,
                p.positions.len()
            )));
        }
    }
    if !ev.is_finite() {
        return Err(PlannerError::NonFinite("ego state"));
    }

    let sample_pos = basis.position.transpose();
    let sample_vel = basis.velocity.transpose();
    let sample_acc = basis.acceleration.transpose();
    let sample_jerk = basis.jerk.transpose();
    let mut g = DMatrix::zeros(6 * steps, n1);
    for (i, (m, sign)) in
        [(&sample_pos, 1.0), (&sample_pos, -1.0), (&sample_acc, 1.0), (&sample_acc, -1.0), (&sample_jerk, 1.0), (&sample_jerk, -1.0)]
            .into_iter()
            .enumerate()
    {
        g.rows_mut(i * steps, steps).copy_from(&(m * sign));
    }

    let origin = ev.px;
    let hx = box_rhs(
        steps,
        nc,
        (bounds.x.0 - origin, bounds.x.1 - origin),
        (limits.ax_min, limits.ax_max),
        (limits.jx_min(), limits.jx_max),
    );
    let hy = box_rhs(steps, nc, bounds.y, (limits.ay_min, limits.ay_max), (limits.jy_min(), limits.jy_max));

    let row = |nu: f64, p: usize| basis_row(&spec, nu, p).transpose();
    let initial_rows = DMatrix::from_rows(&[row(0.0, 0), row(0.0, 1)]);
    let terminal_rows = DMatrix::from_rows(&[row(1.0, 0), row(1.0, 1)]);
    let goal_row = DMatrix::from_rows(&[row(1.0, 0)]);

    let init_theta = replicate(&[ev.heading, ev.yaw_rate], nc);
    let init_x = replicate(&[0.0, ev.vx()], nc);
    let init_y = replicate(&[ev.py, ev.vy()], nc);
    let goal_x = DMatrix::from_fn(1, nc, |_, j| goals.x[j] - origin);
    let goal_y = DMatrix::from_fn(1, nc, |_, j| goals.y[j]);

    let m = predictions.len();
    let rows = m * steps;
    let mut ox = DMatrix::zeros(rows, nc);
    let mut oy = DMatrix::zeros(rows, nc);
    let mut alpha = DMatrix::zeros(rows, nc);
    for (i, p) in predictions.iter().enumerate() {
        for k in 0..steps {
            let r = i * steps + k;
            for j in 0..nc {
                ox[(r, j)] = p.positions[k].0 - origin;
                oy[(r, j)] = p.positions[k].1;
                alpha[(r, j)] = schedule.alpha[k];
            }
        }
    }
    let lx = DMatrix::from_element(rows, nc, ellipse.lx);
    let ly = DMatrix::from_element(rows, nc, ellipse.ly);
    let measured_d = predictions.iter().map(|p| ellipse_coords(ev.position(), p.current, ellipse).d).collect();

    let w = &config.smoothness;
    Ok(ProblemData {
        order: spec.order,
        steps,
        trajectories: nc,
        obstacles: m,
        x_origin: origin,
        sample_pos,
        sample_vel,
        sample_acc,
        sample_jerk,
        g,
        hx,
        hy,
        initial_rows,
        terminal_rows,
        goal_row,
        init_theta,
        init_x,
        init_y,
        goal_x,
        goal_y,
        ox,
        oy,
        lx,
        ly,
        alpha,
        measured_d,
        obstacle_ids: predictions.iter().map(|p| p.id).collect(),
        q_theta: smoothness(basis, w.theta),
        q_x: smoothness(basis, w.x),
        q_y: smoothness(basis, w.y),
        rho: config.penalties,
    })
}

/// Least-squares fit of straight constant-velocity segments from the start to each goal.
pub fn nominal_control_points(order: usize, start: f64, goals: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(order + 1, goals.ncols());
    for j in 0..goals.ncols() {
        let col: DVector<f64> = crate::bezier::linear_control_points(order, start, goals[(0, j)]);
        c.set_column(j, &col);
    }
    c
}
