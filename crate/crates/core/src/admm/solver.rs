use crate::clock::Instant;

use nalgebra::{DMatrix, LU, Dyn};
use serde::{Deserialize, Serialize};

use super::problem::{nominal_control_points, Penalties, ProblemData, SmoothnessWeights};
use crate::barrier::ellipse_angle;
use crate::error::{PlannerError, Result};

/// How the initial/terminal equality rows are combined with the normal equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMode {
    /// Pseudoinverse of the normal block's factor stacked over weighted constraint rows.
    Weighted,
    /// Exact equality-constrained minimizer through the KKT system.
    Kkt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub eps_pri: f64,
    pub relaxation: f64,
    pub penalties: Penalties,
    pub smoothness: SmoothnessWeights,
    pub equality: EqualityMode,
    pub constraint_weight: f64,
    pub warm_start: bool,
    /// Apply the heading dual as one scalar per trajectory (norm of the residual column).
    pub heading_dual_norm: bool,
    /// Let the heading dual act on the position blocks through the velocity basis.
    pub heading_dual_in_position: bool,
    /// Record per-iteration residuals and block timings.
    pub trace_iterations: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 150,
            eps_pri: 1.0,
            relaxation: 1.5,
            penalties: Penalties::default(),
            smoothness: SmoothnessWeights::default(),
            equality: EqualityMode::Weighted,
            constraint_weight: 1e3,
            warm_start: true,
            heading_dual_norm: false,
            heading_dual_in_position: false,
            trace_iterations: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.penalties;
        if !(1.5..=1.8).contains(&self.relaxation) {
            return Err(PlannerError::Config(format!("relaxation must lie in [1.5, 1.8], got {}", self.relaxation)));
        }
        if [p.theta, p.x, p.y, p.obs_x, p.obs_y].iter().any(|&r| !(r > 0.0)) {
            return Err(PlannerError::Config("penalties must be positive".into()));
        }
        if self.max_iterations == 0 || !(self.eps_pri > 0.0) || !(self.constraint_weight > 0.0) {
            return Err(PlannerError::Config("iteration budget, tolerance and constraint weight must be positive".into()));
        }
        let w = &self.smoothness;
        if [w.theta, w.x, w.y].iter().any(|&v| !(v > 0.0)) {
            return Err(PlannerError::Config("smoothness weights must be positive".into()));
        }
        Ok(())
    }
}

/// All primal and dual iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub c_theta: DMatrix<f64>,
    pub c_x: DMatrix<f64>,
    pub c_y: DMatrix<f64>,
    pub z_x: DMatrix<f64>,
    pub z_y: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub lambda_theta: DMatrix<f64>,
    pub lambda_x: DMatrix<f64>,
    pub lambda_y: DMatrix<f64>,
    pub lambda_obs_x: DMatrix<f64>,
    pub lambda_obs_y: DMatrix<f64>,
    pub iteration: usize,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub theta_us: f64,
    pub x_us: f64,
    pub y_us: f64,
    pub barrier_us: f64,
    pub dual_us: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    /// Control points in the world frame.
    pub c_theta: DMatrix<f64>,
    pub c_x: DMatrix<f64>,
    pub c_y: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Norm of each trajectory's obstacle coupling residual.
    pub obstacle_residuals: Vec<f64>,
    pub obstacle_ids: Vec<u32>,
    pub steps: usize,
    pub log: Vec<IterationRecord>,
}

impl SolverResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Cached solve for one quadratic block with equality rows.
#[derive(Debug, Clone)]
enum BlockSystem {
    Weighted { top: DMatrix<f64>, bottom: DMatrix<f64> },
    Kkt { lu: LU<f64, Dyn, Dyn>, size: usize },
}

impl BlockSystem {
    fn new(h: &DMatrix<f64>, eq: &DMatrix<f64>, mode: EqualityMode, weight: f64) -> Result<Self> {
        let n = h.nrows();
        let r = eq.nrows();
        match mode {
            EqualityMode::Weighted => {
                // stack the Cholesky factor of the unit-scaled block over the weighted rows,
                // so the least-squares solution is the minimizer of the penalized quadratic
                let scale = h.diagonal().amax().max(f64::MIN_POSITIVE);
                let chol = (h / scale)
                    .cholesky()
                    .ok_or_else(|| PlannerError::Domain("normal block is not positive definite".into()))?;
                let lower = chol.l();
                let mut a = DMatrix::zeros(n + r, n);
                a.rows_mut(0, n).copy_from(&lower.transpose());
                a.rows_mut(n, r).copy_from(&(eq * weight));
                let pinv = a
                    .pseudo_inverse(1e-13)
                    .map_err(|e| PlannerError::Domain(format!("pseudoinverse failed: {e}")))?;
                let whiten = lower
                    .solve_lower_triangular(&DMatrix::identity(n, n))
                    .ok_or_else(|| PlannerError::Domain("singular Cholesky factor".into()))?;
                Ok(Self::Weighted {
                    top: pinv.columns(0, n) * whiten / scale,
                    bottom: pinv.columns(n, r) * weight,
                })
            }
            EqualityMode::Kkt => {
                let mut k = DMatrix::zeros(n + r, n + r);
                k.view_mut((0, 0), (n, n)).copy_from(h);
                k.view_mut((n, 0), (r, n)).copy_from(eq);
                k.view_mut((0, n), (n, r)).copy_from(&eq.transpose());
                Ok(Self::Kkt { lu: k.lu(), size: n })
            }
        }
    }

    fn solve(&self, rhs: &DMatrix<f64>, eq_rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Self::Weighted { top, bottom } => Ok(top * rhs + bottom * eq_rhs),
            Self::Kkt { lu, size } => {
                let mut b = DMatrix::zeros(size + eq_rhs.nrows(), rhs.ncols());
                b.rows_mut(0, *size).copy_from(rhs);
                b.rows_mut(*size, eq_rhs.nrows()).copy_from(eq_rhs);
                let sol = lu.solve(&b).ok_or_else(|| PlannerError::Domain("singular KKT system".into()))?;
                Ok(sol.rows(0, *size).into_owned())
            }
        }
    }
}

fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if r <= -std::f64::consts::PI {
        r + two_pi
    } else {
        r
    }
}

fn atan2_matrix(num: &DMatrix<f64>, den: &DMatrix<f64>) -> DMatrix<f64> {
    num.zip_map(den, |y, x| if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) })
}

/// Plain dual ascent on the inequality residual.
pub fn update_dual_plain(lambda: &DMatrix<f64>, g: &DMatrix<f64>, c: &DMatrix<f64>, h: &DMatrix<f64>, z_new: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let residual = g * c - h + z_new;
    lambda + g.transpose() * residual * rho
}

/// Over-relaxed dual update, residual formed in the `6N` space and mapped through `G^T`.
#[allow(clippy::too_many_arguments)]
pub fn update_dual_overrelaxed(
    lambda: &DMatrix<f64>,
    g: &DMatrix<f64>,
    c: &DMatrix<f64>,
    h: &DMatrix<f64>,
    z_new: &DMatrix<f64>,
    z_old: &DMatrix<f64>,
    rho: f64,
    relaxation: f64,
) -> DMatrix<f64> {
    let residual = g * c - h + z_new;
    let relaxed = residual * relaxation + (z_new - z_old) * (1.0 - relaxation);
    lambda + g.transpose() * relaxed * rho
}

/// Slack projection `max(0, h - G C)`.
pub fn update_slack(g: &DMatrix<f64>, c: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    (h - g * c).map(|v| v.max(0.0))
}

/// Elementwise `max(1, 1 + (1 - alpha)(d - 1))`.
pub fn update_d(d: &DMatrix<f64>, alpha: &DMatrix<f64>) -> DMatrix<f64> {
    d.zip_map(alpha, |d, a| (1.0 + (1.0 - a) * (d - 1.0)).max(1.0))
}

/// Per-cycle solver with cached block factorizations.
pub struct Solver<'a> {
    pub data: &'a ProblemData,
    pub config: &'a SolverConfig,
    theta_sys: BlockSystem,
    x_sys: BlockSystem,
    y_sys: BlockSystem,
    theta_eq: DMatrix<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(data: &'a ProblemData, config: &'a SolverConfig) -> Result<Self> {
        let rho = &data.rho;
        let s0 = &data.sample_pos;
        let s1 = &data.sample_vel;
        let gram = |m: &DMatrix<f64>| m.transpose() * m;
        let m = data.obstacles as f64;
        let h_theta = &data.q_theta + gram(s0) * rho.theta;
        let g_gram = gram(&data.g);
        let h_x = &data.q_x + gram(s1) * rho.theta + gram(s0) * (rho.obs_x * m) + &g_gram * rho.x;
        let h_y = &data.q_y + gram(s1) * rho.theta + gram(s0) * (rho.obs_y * m) + &g_gram * rho.y;
        let theta_rows = stack_rows(&data.initial_rows, &data.terminal_rows);
        let pos_rows = stack_rows(&data.initial_rows, &data.goal_row);
        let w = config.constraint_weight;
        let theta_eq = stack_rows(&data.init_theta, &DMatrix::zeros(2, data.trajectories));
        Ok(Self {
            data,
            config,
            theta_sys: BlockSystem::new(&h_theta, &theta_rows, config.equality, w)?,
            x_sys: BlockSystem::new(&h_x, &pos_rows, config.equality, w)?,
            y_sys: BlockSystem::new(&h_y, &pos_rows, config.equality, w)?,
            theta_eq,
        })
    }

    /// Cold start: straight segments to the goals, slack and barrier variables consistent with them, zero duals.
    pub fn initial_state(&self) -> SolverState {
        let d = self.data;
        let nc = d.trajectories;
        let c_x = nominal_control_points(d.order, d.init_x[(0, 0)], &d.goal_x);
        let c_y = nominal_control_points(d.order, d.init_y[(0, 0)], &d.goal_y);
        let c_theta = DMatrix::zeros(d.order + 1, nc);
        let (dd, omega) = self.geometric_barrier(&c_x, &c_y);
        let rows = d.steps * d.obstacles;
        SolverState {
            z_x: update_slack(&d.g, &c_x, &d.hx),
            z_y: update_slack(&d.g, &c_y, &d.hy),
            c_theta,
            c_x,
            c_y,
            d: dd.map(|v| v.max(1.0)),
            omega,
            lambda_theta: DMatrix::zeros(d.steps, nc),
            lambda_x: DMatrix::zeros(d.order + 1, nc),
            lambda_y: DMatrix::zeros(d.order + 1, nc),
            lambda_obs_x: DMatrix::zeros(rows, nc),
            lambda_obs_y: DMatrix::zeros(rows, nc),
            iteration: 0,
            residual_history: Vec::new(),
        }
    }

    /// Warm start from a previous cycle: barrier scalings shifted one step (matched by HV id).
    pub fn warm_state(&self, previous: &SolverResult) -> SolverState {
        let mut state = self.initial_state();
        let d = self.data;
        for (m, id) in d.obstacle_ids.iter().enumerate() {
            let Some(pm) = previous.obstacle_ids.iter().position(|p| p == id) else { continue };
            for j in 0..d.trajectories.min(previous.d.ncols()) {
                for k in 0..d.steps {
                    let src_k = (k + 1).min(previous.steps - 1);
                    let v = previous.d[(pm * previous.steps + src_k, j)];
                    state.d[(d.row(m, k), j)] = v.max(1.0);
                }
            }
        }
        state
    }

    /// Geometric ellipse scaling and angle of the sampled positions.
    pub fn geometric_barrier(&self, c_x: &DMatrix<f64>, c_y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.data;
        let px = d.stack_positions(c_x);
        let py = d.stack_positions(c_y);
        let dx = px - &d.ox;
        let dy = py - &d.oy;
        let mut scale = DMatrix::zeros(dx.nrows(), dx.ncols());
        let mut omega = DMatrix::zeros(dx.nrows(), dx.ncols());
        for i in 0..dx.len() {
            let (lx, ly) = (d.lx[i], d.ly[i]);
            scale[i] = ((dx[i] / lx).powi(2) + (dy[i] / ly).powi(2)).sqrt();
            omega[i] = ellipse_angle(dx[i], dy[i], lx, ly);
        }
        (scale, omega)
    }

    pub fn speeds(&self, c_x: &DMatrix<f64>, c_y: &DMatrix<f64>) -> DMatrix<f64> {
        let vx = &self.data.sample_vel * c_x;
        let vy = &self.data.sample_vel * c_y;
        vx.zip_map(&vy, |a, b| a.hypot(b))
    }

    pub fn heading_target(&self, c_x: &DMatrix<f64>, c_y: &DMatrix<f64>) -> DMatrix<f64> {
        atan2_matrix(&(&self.data.sample_vel * c_y), &(&self.data.sample_vel * c_x))
    }

    pub fn update_theta(&self, s: &SolverState) -> Result<DMatrix<f64>> {
        let d = self.data;
        let s0t = d.sample_pos.transpose();
        let target = self.heading_target(&s.c_x, &s.c_y);
        let rhs = -(&s0t * &s.lambda_theta) + &s0t * target * d.rho.theta;
        self.theta_sys.solve(&rhs, &self.theta_eq)
    }

    /// Right-hand side of the x or y normal equations; `lateral` selects the axis.
    fn position_rhs(&self, s: &SolverState, speed: &DMatrix<f64>, lateral: bool) -> DMatrix<f64> {
        let d = self.data;
        let heading = &d.sample_pos * &s.c_theta;
        let (lambda, lambda_obs, obs, axes, rho_box, rho_obs, z, h) = if lateral {
            (&s.lambda_y, &s.lambda_obs_y, &d.oy, &d.ly, d.rho.y, d.rho.obs_y, &s.z_y, &d.hy)
        } else {
            (&s.lambda_x, &s.lambda_obs_x, &d.ox, &d.lx, d.rho.x, d.rho.obs_x, &s.z_x, &d.hx)
        };
        let trig = |w: f64| if lateral { w.sin() } else { w.cos() };
        let heading_component = speed.zip_map(&heading, |v, t| v * trig(t));
        let surface = DMatrix::from_fn(obs.nrows(), obs.ncols(), |r, c| {
            obs[(r, c)] + axes[(r, c)] * s.d[(r, c)] * trig(s.omega[(r, c)])
        });
        let s1t = d.sample_vel.transpose();
        let mut rhs = -lambda - d.unstack_transpose(lambda_obs)
            + &s1t * heading_component * d.rho.theta
            + d.unstack_transpose(&surface) * rho_obs
            + d.g.transpose() * (h - z) * rho_box;
        if self.config.heading_dual_in_position {
            rhs -= &s1t * &s.lambda_theta;
        }
        rhs
    }

    pub fn update_x(&self, s: &SolverState, speed: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.data;
        let eq = stack_rows(&d.init_x, &d.goal_x);
        self.x_sys.solve(&self.position_rhs(s, speed, false), &eq)
    }

    pub fn update_y(&self, s: &SolverState, speed: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.data;
        let eq = stack_rows(&d.init_y, &d.goal_y);
        self.y_sys.solve(&self.position_rhs(s, speed, true), &eq)
    }

    /// Barrier-chain lower bound on each scaling, built from the current iterate.
    pub fn barrier_floor(&self, d_iter: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.data;
        DMatrix::from_fn(d_iter.nrows(), d_iter.ncols(), |r, j| {
            let (m, k) = (r / p.steps, r % p.steps);
            let prev = if k == 0 { p.measured_d[m] } else { d_iter[(r - 1, j)] };
            let bound = 1.0 + (1.0 - p.alpha[(r, j)]) * (prev - 1.0);
            // a safe predecessor keeps the floor at the ellipse boundary
            if prev >= 1.0 {
                bound.max(1.0)
            } else {
                bound
            }
        })
    }

    /// Minimizer of the augmented Lagrangian in `d` (angle fixed), projected onto the barrier floor.
    pub fn update_barrier_scaling(&self, s: &SolverState) -> DMatrix<f64> {
        let p = self.data;
        let px = p.stack_positions(&s.c_x);
        let py = p.stack_positions(&s.c_y);
        let floor = self.barrier_floor(&s.d);
        let (rx, ry) = (p.rho.obs_x, p.rho.obs_y);
        DMatrix::from_fn(px.nrows(), px.ncols(), |r, j| {
            let i = (r, j);
            let (c, sn) = (s.omega[i].cos(), s.omega[i].sin());
            let (lx, ly) = (p.lx[i], p.ly[i]);
            let dx = px[i] - p.ox[i];
            let dy = py[i] - p.oy[i];
            let num = rx * lx * c * dx + ry * ly * sn * dy + s.lambda_obs_x[i] * lx * c + s.lambda_obs_y[i] * ly * sn;
            let den = rx * lx * lx * c * c + ry * ly * ly * sn * sn;
            floor[i].max(num / den)
        })
    }

    pub fn update_omega(&self, c_x: &DMatrix<f64>, c_y: &DMatrix<f64>) -> DMatrix<f64> {
        self.geometric_barrier(c_x, c_y).1
    }

    /// Obstacle coupling residuals `V_w C - O - L d (cos w, sin w)`.
    pub fn obstacle_residuals(&self, s: &SolverState) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = self.data;
        let px = p.stack_positions(&s.c_x);
        let py = p.stack_positions(&s.c_y);
        let rx = DMatrix::from_fn(px.nrows(), px.ncols(), |r, j| {
            let i = (r, j);
            px[i] - p.ox[i] - p.lx[i] * s.d[i] * s.omega[i].cos()
        });
        let ry = DMatrix::from_fn(py.nrows(), py.ncols(), |r, j| {
            let i = (r, j);
            py[i] - p.oy[i] - p.ly[i] * s.d[i] * s.omega[i].sin()
        });
        (rx, ry)
    }

    /// Velocity-heading residuals, with the speed recomputed from the current curves.
    pub fn nonholonomic_residuals(&self, s: &SolverState) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = self.data;
        let v = self.speeds(&s.c_x, &s.c_y);
        let heading = &p.sample_pos * &s.c_theta;
        let rx = &p.sample_vel * &s.c_x - v.zip_map(&heading, |v, t| v * t.cos());
        let ry = &p.sample_vel * &s.c_y - v.zip_map(&heading, |v, t| v * t.sin());
        (rx, ry)
    }

    pub fn heading_residual(&self, s: &SolverState) -> DMatrix<f64> {
        let heading = &self.data.sample_pos * &s.c_theta;
        let target = self.heading_target(&s.c_x, &s.c_y);
        heading.zip_map(&target, |a, b| wrap_angle(a - b))
    }

    /// Dual ascent on the heading and obstacle couplings.
    pub fn update_duals_obstacle_and_theta(&self, s: &mut SolverState) {
        let p = self.data;
        let (rx, ry) = self.obstacle_residuals(s);
        s.lambda_obs_x += rx * p.rho.obs_x;
        s.lambda_obs_y += ry * p.rho.obs_y;
        let r = self.heading_residual(s);
        if self.config.heading_dual_norm {
            for j in 0..r.ncols() {
                let step = p.rho.theta * r.column(j).norm();
                s.lambda_theta.column_mut(j).add_scalar_mut(step);
            }
        } else {
            s.lambda_theta += r * p.rho.theta;
        }
    }

    pub fn primal_residual(&self, s: &SolverState) -> f64 {
        let (nx, ny) = self.nonholonomic_residuals(s);
        let (ox, oy) = self.obstacle_residuals(s);
        let sq = nx.norm_squared() + ny.norm_squared() + ox.norm_squared() + oy.norm_squared();
        sq.sqrt() / self.data.trajectories as f64
    }

    /// One pass in the fixed order: heading, x, x-slack, y, y-slack, d, angle, duals.
    pub fn iterate(&self, s: &mut SolverState) -> Result<IterationRecord> {
        let p = self.data;
        let relax = self.config.relaxation;
        let speed = self.speeds(&s.c_x, &s.c_y);

        let t0 = Instant::now();
        s.c_theta = self.update_theta(s)?;
        let t1 = Instant::now();
        s.c_x = self.update_x(s, &speed)?;
        let z_x_new = update_slack(&p.g, &s.c_x, &p.hx);
        let t2 = Instant::now();
        s.c_y = self.update_y(s, &speed)?;
        let z_y_new = update_slack(&p.g, &s.c_y, &p.hy);
        let t3 = Instant::now();
        s.d = self.update_barrier_scaling(s);
        s.omega = self.update_omega(&s.c_x, &s.c_y);
        let t4 = Instant::now();
        s.lambda_x = update_dual_overrelaxed(&s.lambda_x, &p.g, &s.c_x, &p.hx, &z_x_new, &s.z_x, p.rho.x, relax);
        s.lambda_y = update_dual_overrelaxed(&s.lambda_y, &p.g, &s.c_y, &p.hy, &z_y_new, &s.z_y, p.rho.y, relax);
        s.z_x = z_x_new;
        s.z_y = z_y_new;
        self.update_duals_obstacle_and_theta(s);
        let t5 = Instant::now();

        let residual = self.primal_residual(s);
        s.iteration += 1;
        s.residual_history.push(residual);
        let us = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e6;
        Ok(IterationRecord {
            iteration: s.iteration,
            residual,
            theta_us: us(t0, t1),
            x_us: us(t1, t2),
            y_us: us(t2, t3),
            barrier_us: us(t3, t4),
            dual_us: us(t4, t5),
        })
    }

    pub fn run(&self, mut state: SolverState) -> Result<SolverResult> {
        let mut log = Vec::new();
        let mut best: Option<(f64, SolverState)> = None;
        let mut converged = false;
        for _ in 0..self.config.max_iterations {
            let rec = self.iterate(&mut state)?;
            if !rec.residual.is_finite() || !state.c_x.iter().chain(state.c_y.iter()).all(|v| v.is_finite()) {
                return Err(PlannerError::NonFinite("solver iterate"));
            }
            if self.config.trace_iterations {
                log.push(rec);
            }
            if rec.residual < self.config.eps_pri {
                converged = true;
                break;
            }
            if best.as_ref().is_none_or(|(r, _)| rec.residual < *r) {
                best = Some((rec.residual, state.clone()));
            }
        }
        let history = state.residual_history.clone();
        let iterations = state.iteration;
        let chosen = match (converged, best) {
            (false, Some((_, b))) => b,
            _ => state,
        };
        Ok(self.finish(chosen, history, iterations, converged, log))
    }

    fn finish(&self, s: SolverState, history: Vec<f64>, iterations: usize, converged: bool, log: Vec<IterationRecord>) -> SolverResult {
        let p = self.data;
        let (rx, ry) = self.obstacle_residuals(&s);
        if log::log_enabled!(log::Level::Trace) {
            let (nx, ny) = self.nonholonomic_residuals(&s);
            let per_column = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> Vec<f64> {
                (0..p.trajectories).map(|j| (a.column(j).norm_squared() + b.column(j).norm_squared()).sqrt()).collect()
            };
            log::trace!(
                "residual split after {iterations} iterations: nonholonomic {:.3?} obstacle {:.3?}",
                per_column(&nx, &ny),
                per_column(&rx, &ry)
            );
        }
        let obstacle_residuals = (0..p.trajectories)
            .map(|j| (rx.column(j).norm_squared() + ry.column(j).norm_squared()).sqrt())
            .collect();
        SolverResult {
            c_theta: s.c_theta,
            c_x: s.c_x.add_scalar(p.x_origin),
            c_y: s.c_y,
            d: s.d,
            omega: s.omega,
            iterations,
            residual_history: history,
            converged,
            obstacle_residuals,
            obstacle_ids: p.obstacle_ids.clone(),
            steps: p.steps,
            log,
        }
    }
}

/// Solve one cycle, cold or warm started.
pub fn solve(data: &ProblemData, config: &SolverConfig, warm: Option<&SolverResult>) -> Result<SolverResult> {
    let solver = Solver::new(data, config)?;
    let state = match warm {
        Some(prev) if config.warm_start => solver.warm_state(prev),
        _ => solver.initial_state(),
    };
    solver.run(state)
}
