//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Every tolerance used below is a named constant; none is derived from the
//! values being checked.

use std::process::ExitCode;
use std::time::Instant;

use barrier_planner::admm::{assemble, update_dual_overrelaxed, update_dual_plain, EqualityMode, Solver, SolverConfig, SolverState};
use barrier_planner::barrier::{certify_invariance, certify_recovery, ellipse_coords, linear_schedule, lyapunov_value, SafetyEllipse};
use barrier_planner::bezier::{bernstein, build_basis, evaluate_at, linear_control_points, BezierSpec};
use barrier_planner::goal_sampler::{double_s_distance, GoalMatrix, KinematicLimits};
use barrier_planner::sim::{offsets_for, run_closed_loop, trace_to_string, PlanContext, Planner, RunOutput, ScenarioConfig};
use barrier_planner::traffic::{predict_constant_velocity, HvState};
use barrier_planner::EgoState;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PARTITION_TOL: f64 = 1e-12;
const DERIVATIVE_REL_TOL: f64 = 1e-5;
const LINEAR_REPRO_TOL: f64 = 1e-9;
const INVARIANCE_SEQUENCES: usize = 10_000;
const CONTRACTION_TOL: f64 = 1e-9;
const DOUBLE_S_DRAWS: usize = 1000;
const DOUBLE_S_DT: f64 = 1e-4;
const DOUBLE_S_REL_TOL: f64 = 1e-3;
const CASE_BOUNDARY_TOL: f64 = 1e-6;
const BLOCK_INSTANCES: usize = 100;
const BLOCK_GRADIENT_TOL: f64 = 1e-6;
const STATIC_BARRIER_TOL: f64 = 1e-6;
const STATIC_EPS_PRI: f64 = 0.2;
const STATIC_MAX_ITERATIONS: usize = 3000;
const INITIAL_STATE_TOL: f64 = 1e-4;
const CRUISE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const CRUISE_SPEED_BAND: (f64, f64) = (14.5, 15.5);
const CRUISE_JERK_MEAN_MAX: f64 = 0.5;
const CRUISE_JERK_PEAK_MAX: f64 = 1.5;
const CRUISE_SWITCH_RATE_MAX: f64 = 5.0;
const CRUISE_SECONDS_PER_SEED: f64 = 120.0;
const CUT_IN_VEHICLE: u32 = 2;
const FOLLOWING_DISTANCE: f64 = 20.0;
const FOLLOWING_REL_TOL: f64 = 0.10;
const CONSTRUCTION_MIN_SPEED: f64 = 13.5;
const CYCLE_MS_MAX: f64 = 100.0;
const CANDIDATE_SCALING_MAX: f64 = 6.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn run(name: &str, tweak: impl FnOnce(&mut ScenarioConfig)) -> RunOutput {
    let mut cfg = ScenarioConfig::resolve(name).expect("bundled scenario");
    tweak(&mut cfg);
    run_closed_loop(&cfg).expect("closed-loop run")
}

fn basis_correctness() -> Outcome {
    let spec = BezierSpec::with_period(10, 50, 0.1).unwrap();
    let basis = build_basis(&spec).unwrap();
    let partition = (0..spec.steps)
        .map(|k| (basis.position.column(k).sum() - 1.0).abs())
        .fold(0.0, f64::max);

    // central differences of the next lower derivative, in physical time
    let h = 1e-5;
    let mut derivative = 0.0f64;
    for p in 1..=3 {
        let upper = basis.by_derivative(p);
        let scale = upper.amax().max(1.0);
        for k in 0..spec.steps {
            let nu = spec.nu(k + 1);
            let (a, b) = (nu - h, nu + h);
            let ra = barrier_planner::bezier::basis_row(&spec, a, p - 1);
            let rb = barrier_planner::bezier::basis_row(&spec, b, p - 1);
            for i in 0..=spec.order {
                let fd = (rb[i] - ra[i]) / ((b - a) * spec.duration);
                derivative = derivative.max((fd - upper[(i, k)]).abs() / scale);
            }
        }
    }

    let mut linear = 0.0f64;
    let mut r = rng(11);
    for _ in 0..200 {
        let (p0, p1) = (r.random_range(-100.0..100.0), r.random_range(-100.0..100.0));
        let points = linear_control_points(spec.order, p0, p1);
        let nu: f64 = r.random_range(0.0..=1.0);
        let v = evaluate_at(&spec, &points, nu);
        let slope = (p1 - p0) / spec.duration;
        linear = linear.max((v[0] - (p0 + (p1 - p0) * nu)).abs()).max((v[1] - slope).abs()).max(v[2].abs());
    }
    let raw = (0..=spec.order).map(|i| bernstein(i, spec.order, 0.37).unwrap()).sum::<f64>();
    let pass = partition < PARTITION_TOL && derivative < DERIVATIVE_REL_TOL && linear < LINEAR_REPRO_TOL && (raw - 1.0).abs() < PARTITION_TOL;
    outcome(pass, format!("partition {partition:.1e}, derivative rel {derivative:.1e}, linear {linear:.1e}"))
}

fn barrier_theorems() -> Outcome {
    let schedule = linear_schedule(0.2, 50).unwrap();
    let mut r = rng(22);
    let mut failures = 0;
    let mut nonpositive = 0;
    for _ in 0..INVARIANCE_SEQUENCES {
        let mut h = vec![r.random_range(0.0..5.0)];
        for k in 1..schedule.len() {
            let floor = (1.0 - schedule.alpha[k]) * h[k - 1];
            h.push(floor + r.random_range(1e-6..1.0));
        }
        if !certify_invariance(&h, &schedule).unwrap().invariant {
            failures += 1;
        }
        nonpositive += h[1..].iter().filter(|&&v| v <= 0.0).count();
    }

    let mut worst = 0.0f64;
    let mut converging = true;
    for _ in 0..100 {
        let h0: f64 = -r.random_range(0.01..1.0);
        let mut h = vec![h0];
        for k in 1..schedule.len() {
            h.push((1.0 - schedule.alpha[k]) * h[k - 1]);
        }
        let mut product = 1.0;
        for k in 1..h.len() {
            product *= 1.0 - schedule.alpha[k];
            worst = worst.max((h[k].abs() - product * h0.abs()).abs());
        }
        let report = certify_recovery(&h, &schedule).unwrap();
        converging &= report.converging;
    }
    let pass = failures == 0 && nonpositive == 0 && converging && worst < CONTRACTION_TOL;
    outcome(
        pass,
        format!("{INVARIANCE_SEQUENCES} sequences, {failures} rejected, {nonpositive} non-positive; contraction error {worst:.1e}"),
    )
}

/// Jerk segments computed directly from the acceleration-peak formulas.
fn jerk_plan(v0: f64, a0: f64, vd: f64, amax: f64, amin: f64, j: f64) -> Vec<(f64, f64)> {
    let dv = vd - v0;
    if dv >= a0 * a0.abs() / (2.0 * j) {
        let peak = ((2.0 * dv * j + a0 * a0) / 2.0).sqrt();
        if peak <= amax {
            vec![((peak - a0) / j, j), (peak / j, -j)]
        } else {
            let hold = (dv - (amax * amax - a0 * a0) / (2.0 * j) - amax * amax / (2.0 * j)) / amax;
            vec![((amax - a0) / j, j), (hold, 0.0), (amax / j, -j)]
        }
    } else {
        let peak = -((a0 * a0 - 2.0 * dv * j) / 2.0).sqrt();
        if peak >= amin {
            vec![((a0 - peak) / j, -j), (-peak / j, j)]
        } else {
            let hold = (-dv - (amin * amin - a0 * a0) / (2.0 * j) - amin * amin / (2.0 * j)) / -amin;
            vec![((a0 - amin) / j, -j), (hold, 0.0), (-amin / j, j)]
        }
    }
}

fn integrate(v0: f64, a0: f64, plan: &[(f64, f64)], horizon: f64) -> f64 {
    let steps = (horizon / DOUBLE_S_DT).round() as usize;
    let bounds: Vec<f64> = plan.iter().scan(0.0, |t, (d, _)| {
        *t += d;
        Some(*t)
    }).collect();
    let (mut p, mut v, mut a) = (0.0, v0, a0);
    for s in 0..steps {
        let t_mid = (s as f64 + 0.5) * DOUBLE_S_DT;
        let jerk = bounds.iter().position(|&b| t_mid < b).map_or(0.0, |i| plan[i].1);
        let a_next = a + jerk * DOUBLE_S_DT;
        let v_next = v + (a + a_next) / 2.0 * DOUBLE_S_DT;
        p += (v + v_next) / 2.0 * DOUBLE_S_DT;
        (v, a) = (v_next, a_next);
    }
    p
}

fn double_s_oracle() -> Outcome {
    let mut r = rng(33);
    let horizon = 5.0;
    let mut worst = 0.0f64;
    let mut cases = [0usize; 2];
    for _ in 0..DOUBLE_S_DRAWS {
        let limits = KinematicLimits {
            desired_speed: r.random_range(0.0..24.0),
            jx_max: r.random_range(0.3..2.0),
            ..KinematicLimits::default()
        };
        let v0 = r.random_range(0.0..24.0);
        let a0 = r.random_range(limits.ax_min..limits.ax_max);
        let profile = double_s_distance(v0, a0, &limits, horizon).unwrap();
        cases[(profile.case - 1) as usize] += 1;
        let plan = jerk_plan(v0, a0, limits.desired_speed, limits.ax_max, limits.ax_min, limits.jx_max);
        let reference = integrate(v0, a0, &plan, horizon);
        worst = worst.max((profile.delta_px - reference).abs() / reference.abs().max(1.0));
    }

    // both sides of the saturation and direction boundaries
    let mut jump = 0.0f64;
    for _ in 0..50 {
        let j = r.random_range(0.5..2.0);
        let base = KinematicLimits { jx_max: j, ..KinematicLimits::default() };
        let v0 = r.random_range(0.0..10.0);
        let a0 = r.random_range(-1.0..1.0);
        let saturating = v0 + (2.0 * base.ax_max * base.ax_max - a0 * a0) / (2.0 * j);
        let turning = v0 + a0 * a0.abs() / (2.0 * j);
        for vd in [saturating, turning] {
            let at = |v: f64| double_s_distance(v0, a0, &KinematicLimits { desired_speed: v, ..base }, horizon).unwrap().delta_px;
            jump = jump.max((at(vd + 1e-10) - at(vd - 1e-10)).abs());
        }
    }
    let pass = worst < DOUBLE_S_REL_TOL && jump < CASE_BOUNDARY_TOL && cases.iter().all(|&c| c > 0);
    outcome(pass, format!("max rel error {worst:.1e} (case 1: {}, case 2: {}), boundary jump {jump:.1e}", cases[0], cases[1]))
}

/// Component of `g` outside the row space of `a`, i.e. the gradient left after the equality multipliers.
fn projected(g: &DVector<f64>, a: &DMatrix<f64>) -> DVector<f64> {
    let aat = a * a.transpose();
    let nu = aat.lu().solve(&(a * g)).expect("independent equality rows");
    g - a.transpose() * nu
}

fn stacked(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

/// Block gradients of the augmented Lagrangian at each block update, other blocks fixed.
fn block_gradients(seed: u64) -> [f64; 5] {
    let mut r = rng(seed);
    let spec = BezierSpec::with_period(4, 5, 0.2).unwrap();
    let basis = build_basis(&spec).unwrap();
    let schedule = linear_schedule(0.2, 5).unwrap();
    let ellipse = SafetyEllipse::default();
    let config = SolverConfig { equality: EqualityMode::Kkt, ..SolverConfig::default() };
    let ev = EgoState {
        heading: r.random_range(-0.1..0.1),
        yaw_rate: r.random_range(-0.05..0.05),
        ax: r.random_range(-1.0..1.0),
        ..EgoState::cruising(r.random_range(-20.0..20.0), r.random_range(-3.0..3.0), r.random_range(5.0..20.0))
    };
    let hv = HvState::new(7, ev.px + r.random_range(5.0..30.0), r.random_range(-4.0..4.0), r.random_range(0.0..15.0), 0);
    let prediction = predict_constant_velocity(&hv, 5, 0.2);
    let goals = GoalMatrix {
        x: vec![ev.px + r.random_range(2.0..20.0)],
        y: vec![r.random_range(-4.0..4.0)],
        degraded: vec![false],
        profile: double_s_distance(ev.speed, 0.0, &KinematicLimits::default(), 1.0).unwrap(),
    };
    let bounds = barrier_planner::admm::PositionBounds::default();
    let data = assemble(&goals, &ev, &[prediction], &basis, &KinematicLimits::default(), &bounds, &schedule, &ellipse, &config).unwrap();
    let solver = Solver::new(&data, &config).unwrap();

    let n1 = 5;
    let rows = data.steps * data.obstacles;
    let mut s = SolverState {
        c_theta: random_matrix(&mut r, n1, 1, 0.2),
        c_x: DMatrix::from_fn(n1, 1, |i, _| 2.0 * i as f64 + r.random_range(-0.5..0.5)),
        c_y: random_matrix(&mut r, n1, 1, 3.0),
        z_x: random_matrix(&mut r, 6 * data.steps, 1, 1.0).abs(),
        z_y: random_matrix(&mut r, 6 * data.steps, 1, 1.0).abs(),
        d: DMatrix::from_fn(rows, 1, |_, _| r.random_range(0.8..3.0)),
        omega: random_matrix(&mut r, rows, 1, 3.0),
        lambda_theta: random_matrix(&mut r, data.steps, 1, 1.0),
        lambda_x: random_matrix(&mut r, n1, 1, 1.0),
        lambda_y: random_matrix(&mut r, n1, 1, 1.0),
        lambda_obs_x: random_matrix(&mut r, rows, 1, 1.0),
        lambda_obs_y: random_matrix(&mut r, rows, 1, 1.0),
        iteration: 0,
        residual_history: Vec::new(),
    };
    let rho = data.rho;
    let (s0, s1) = (&data.sample_pos, &data.sample_vel);
    let col = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());

    // heading block
    let vx = s1 * &s.c_x;
    let vy = s1 * &s.c_y;
    let target = vy.zip_map(&vx, f64::atan2);
    s.c_theta = solver.update_theta(&s).unwrap();
    let g = &data.q_theta * &s.c_theta + s0.transpose() * &s.lambda_theta + s0.transpose() * (s0 * &s.c_theta - &target) * rho.theta;
    let theta_rows = stacked(&data.initial_rows, &data.terminal_rows);
    let theta_eq = stacked(&data.init_theta, &DMatrix::zeros(2, 1));
    let theta_grad = projected(&col(&g), &theta_rows).norm() + (&theta_rows * &s.c_theta - theta_eq).norm();

    // position blocks share one form; `lateral` picks the axis
    let speed = vx.zip_map(&vy, f64::hypot);
    let heading = s0 * &s.c_theta;
    let position_grad = |s: &SolverState, lateral: bool| -> f64 {
        let (c, q, lambda, lambda_obs, obs, axes, z, h, rho_box, rho_obs, init, goal) = if lateral {
            (&s.c_y, &data.q_y, &s.lambda_y, &s.lambda_obs_y, &data.oy, &data.ly, &s.z_y, &data.hy, rho.y, rho.obs_y, &data.init_y, &data.goal_y)
        } else {
            (&s.c_x, &data.q_x, &s.lambda_x, &s.lambda_obs_x, &data.ox, &data.lx, &s.z_x, &data.hx, rho.x, rho.obs_x, &data.init_x, &data.goal_x)
        };
        let trig = |w: f64| if lateral { w.sin() } else { w.cos() };
        let along = speed.zip_map(&heading, |v, t| v * trig(t));
        let surface = DMatrix::from_fn(rows, 1, |i, _| obs[i] + axes[i] * s.d[i] * trig(s.omega[i]));
        let g = q * c
            + lambda
            + s0.transpose() * lambda_obs
            + s1.transpose() * (s1 * c - along) * rho.theta
            + s0.transpose() * (s0 * c - surface) * rho_obs
            + data.g.transpose() * (&data.g * c - h + z) * rho_box;
        let eq_rows = stacked(&data.initial_rows, &data.goal_row);
        projected(&col(&g), &eq_rows).norm() + (&eq_rows * c - stacked(init, goal)).norm()
    };
    s.c_x = solver.update_x(&s, &speed).unwrap();
    let x_grad = position_grad(&s, false);
    s.c_y = solver.update_y(&s, &speed).unwrap();
    let y_grad = position_grad(&s, true);

    // slack block: min rho/2 |G c - h + z|^2 over z >= 0
    let z_new = barrier_planner::admm::update_slack(&data.g, &s.c_x, &data.hx);
    let gz = (&data.g * &s.c_x - &data.hx + &z_new) * rho.x;
    let slack_grad = gz.zip_map(&z_new, |g, z| if z > 0.0 { g } else { g.min(0.0) }).norm();

    // barrier scaling block, angle fixed, bounded below by the barrier chain
    let old_d = s.d.clone();
    s.d = solver.update_barrier_scaling(&s);
    let px = s0 * &s.c_x;
    let py = s0 * &s.c_y;
    let mut d_grad = 0.0f64;
    for k in 0..data.steps {
        let prev = if k == 0 { data.measured_d[0] } else { old_d[k - 1] };
        let mut floor = 1.0 + (1.0 - data.alpha[k]) * (prev - 1.0);
        if prev >= 1.0 {
            floor = floor.max(1.0);
        }
        let (c, sn) = (s.omega[k].cos(), s.omega[k].sin());
        let (lx, ly) = (data.lx[k], data.ly[k]);
        let rx = px[k] - data.ox[k] - lx * s.d[k] * c;
        let ry = py[k] - data.oy[k] - ly * s.d[k] * sn;
        let g = -(s.lambda_obs_x[k] + rho.obs_x * rx) * lx * c - (s.lambda_obs_y[k] + rho.obs_y * ry) * ly * sn;
        let proj = if s.d[k] > floor + 1e-12 { g } else { g.min(0.0) };
        d_grad = d_grad.max(proj.abs()).max((floor - s.d[k]).max(0.0));
    }
    [theta_grad, x_grad, y_grad, slack_grad, d_grad]
}

fn block_optimality() -> Outcome {
    let mut worst = [0.0f64; 5];
    for seed in 0..BLOCK_INSTANCES as u64 {
        for (w, g) in worst.iter_mut().zip(block_gradients(seed)) {
            *w = w.max(g);
        }
    }

    let mut r = rng(44);
    let mut identical = true;
    for _ in 0..BLOCK_INSTANCES {
        let g = random_matrix(&mut r, 30, 5, 10.0);
        let c = random_matrix(&mut r, 5, 2, 10.0);
        let h = random_matrix(&mut r, 30, 2, 10.0);
        let lambda = random_matrix(&mut r, 5, 2, 10.0);
        let z_old = random_matrix(&mut r, 30, 2, 1.0).abs();
        let z_new = barrier_planner::admm::update_slack(&g, &c, &h);
        let plain = update_dual_plain(&lambda, &g, &c, &h, &z_new, 5.0);
        let relaxed = update_dual_overrelaxed(&lambda, &g, &c, &h, &z_new, &z_old, 5.0, 1.0);
        identical &= plain.iter().zip(relaxed.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    let pass = worst.iter().all(|&w| w < BLOCK_GRADIENT_TOL) && identical;
    outcome(
        pass,
        format!(
            "max gradient heading {:.1e}, x {:.1e}, y {:.1e}, slack {:.1e}, scaling {:.1e}; relaxation 1 bitwise {}",
            worst[0], worst[1], worst[2], worst[3], worst[4], if identical { "equal" } else { "different" }
        ),
    )
}

fn static_obstacle() -> Outcome {
    let mut cfg = ScenarioConfig::resolve("static_obstacle").unwrap();
    cfg.planner.solver.eps_pri = STATIC_EPS_PRI;
    cfg.planner.solver.max_iterations = STATIC_MAX_ITERATIONS;
    let planner = Planner::new(cfg.planner.clone()).unwrap();
    let traffic = cfg.build_traffic().unwrap();
    let ev = cfg.initial_ego();
    let lane = traffic.lane_of(ev.py);
    let ctx = PlanContext {
        lane_centers: cfg.road.lane_centers.clone(),
        y_bounds: cfg.road.y_bounds,
        goal_y_bounds: cfg.road.y_bounds,
        lateral_reference: cfg.road.lane_centers[lane],
        last_lane: lane,
        last_maneuver: 0,
    };
    let out = planner.plan(&ev, &traffic.states(), &ctx, None).unwrap();
    let mut min_d = f64::INFINITY;
    for t in &out.trajectories {
        for p in &out.predictions {
            for k in 0..t.len() {
                min_d = min_d.min(ellipse_coords((t.x[k], t.y[k]), p.positions[k], &cfg.planner.barrier).d);
            }
        }
    }
    let spec = planner.basis.spec;
    let mut initial = 0.0f64;
    for j in 0..out.goals.len() {
        let x = evaluate_at(&spec, &out.result.c_x.column(j).into_owned(), 0.0);
        let y = evaluate_at(&spec, &out.result.c_y.column(j).into_owned(), 0.0);
        let th = evaluate_at(&spec, &out.result.c_theta.column(j).into_owned(), 0.0);
        for e in [x[0] - ev.px, x[1] - ev.vx(), y[0] - ev.py, y[1] - ev.vy(), th[0] - ev.heading, th[1] - ev.yaw_rate] {
            initial = initial.max(e.abs());
        }
    }
    let pass = out.result.converged && !out.predictions.is_empty() && min_d >= 1.0 - STATIC_BARRIER_TOL && initial < INITIAL_STATE_TOL;
    outcome(
        pass,
        format!(
            "converged {} in {} iterations, min d {min_d:.6}, initial-state error {initial:.1e}",
            out.result.converged, out.result.iterations
        ),
    )
}

fn cruise_reproduction() -> Outcome {
    let results: Vec<(u64, RunOutput, f64)> = CRUISE_SEEDS
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let out = run("idm_cruise", |c| c.seed = seed);
            (seed, out, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (seed, out, seconds) in &results {
        let m = &out.metrics;
        let ok = (CRUISE_SPEED_BAND.0..=CRUISE_SPEED_BAND.1).contains(&m.v_mean)
            && m.j_mean <= CRUISE_JERK_MEAN_MAX
            && m.j_max <= CRUISE_JERK_PEAK_MAX
            && m.p_d <= CRUISE_SWITCH_RATE_MAX
            && m.collisions == 0
            && *seconds <= CRUISE_SECONDS_PER_SEED;
        pass &= ok;
        parts.push(format!(
            "seed {seed}: V {:.2} J {:.2}/{:.2} P_d {:.1}% coll {} {:.0}s",
            m.v_mean, m.j_mean, m.j_max, m.p_d, m.collisions, seconds
        ));
    }
    outcome(pass, parts.join("; "))
}

fn cut_in_recovery() -> Outcome {
    let out = run("cut_in", |_| {});
    let lyapunov: Vec<f64> = out.trace.iter().map(|r| r.barrier_of(CUT_IN_VEHICLE).map_or(0.0, lyapunov_value)).collect();
    let peak = lyapunov.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, v)| (i, *v)).unwrap();
    let monotone = lyapunov[peak.0..].windows(2).all(|w| w[1] <= w[0]);
    let last = out.trace.last().unwrap();
    let final_headway = last.headway.unwrap_or(f64::NAN);
    let converged = (final_headway - FOLLOWING_DISTANCE).abs() <= FOLLOWING_REL_TOL * FOLLOWING_DISTANCE;
    let violated = peak.1 > 0.0;
    let pass = violated && monotone && converged && out.metrics.collisions == 0;
    outcome(
        pass,
        format!(
            "peak V {:.3} at {:.1}s, monotone after {monotone}, final headway {final_headway:.2} m, collisions {}",
            peak.1,
            out.trace[peak.0].time,
            out.metrics.collisions
        ),
    )
}

fn construction_lane_change() -> Outcome {
    let cfg = ScenarioConfig::resolve("construction").unwrap();
    let zone = cfg.construction[0];
    let out = run_closed_loop(&cfg).unwrap();
    let (half_len, half_wid) = (cfg.ego.length / 2.0, cfg.ego.width / 2.0);
    let clear = |r: &barrier_planner::sim::TraceRow| r.py + half_wid <= zone.y_min;
    let cleared_at = out.trace.iter().find(|r| clear(r)).map(|r| r.px + half_len);
    let stays_clear = out
        .trace
        .iter()
        .filter(|r| r.px + half_len >= zone.x_start && r.px - half_len <= zone.x_end)
        .all(clear);
    let before = cleared_at.is_some_and(|x| x < zone.x_start);
    let m = &out.metrics;
    let pass = before && stays_clear && m.v_mean >= CONSTRUCTION_MIN_SPEED && m.collisions == 0;
    outcome(
        pass,
        format!(
            "free lane reached at front x {:.1} m (blockage {:.0} m), V {:.2}, collisions {}",
            cleared_at.unwrap_or(f64::NAN),
            zone.x_start,
            m.v_mean,
            m.collisions
        ),
    )
}

fn timing() -> Outcome {
    let single = run("idm_cruise", |c| c.planner.delta_y = offsets_for(1));
    let five = run("idm_cruise", |c| c.planner.delta_y = offsets_for(5));
    let ratio = five.stats.mean_ms / single.stats.mean_ms;
    let pass = five.stats.mean_ms < CYCLE_MS_MAX && ratio <= CANDIDATE_SCALING_MAX;
    outcome(
        pass,
        format!(
            "N_c=5 {:.1} ms ({:.0} it), N_c=1 {:.2} ms ({:.0} it), ratio {ratio:.2}, per-iteration ratio {:.2}",
            five.stats.mean_ms,
            five.stats.mean_iterations,
            single.stats.mean_ms,
            single.stats.mean_iterations,
            (five.stats.mean_ms / five.stats.mean_iterations) / (single.stats.mean_ms / single.stats.mean_iterations)
        ),
    )
}

fn determinism() -> Outcome {
    let mut identical = true;
    let mut bytes = 0;
    for (name, seed, seconds) in [("idm_cruise", 9, 8.0), ("construction", 4, 6.0), ("replay", 0, 6.0)] {
        let once = |_: ()| {
            let out = run(name, |c| {
                c.seed = seed;
                c.duration_s = seconds;
            });
            trace_to_string(&out.trace).unwrap()
        };
        let (a, b) = (once(()), once(()));
        bytes += a.len();
        identical &= a.as_bytes() == b.as_bytes();
    }
    outcome(identical, format!("3 scenario pairs, {bytes} trace bytes, identical {identical}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("basis correctness", basis_correctness),
        ("barrier invariance and recovery", barrier_theorems),
        ("double-S oracle", double_s_oracle),
        ("ADMM block optimality", block_optimality),
        ("static obstacle feasibility", static_obstacle),
        ("IDM cruise metrics", cruise_reproduction),
        ("cut-in recovery", cut_in_recovery),
        ("construction lane change", construction_lane_change),
        ("cycle timing", timing),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{verdict} {:>2} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
