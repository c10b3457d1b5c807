//! Bernstein basis matrices and sampling of Bezier-parameterized trajectories.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};

const EXACT_BINOMIAL_MAX: usize = 20;

/// Curve order, horizon length and duration of one planning window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BezierSpec {
    pub order: usize,
    pub steps: usize,
    pub duration: f64,
}

impl BezierSpec {
    pub fn new(order: usize, steps: usize, duration: f64) -> Result<Self> {
        let spec = Self { order, steps, duration };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with a fixed sampling period, `duration = steps * dt`.
    pub fn with_period(order: usize, steps: usize, dt: f64) -> Result<Self> {
        Self::new(order, steps, steps as f64 * dt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 4 {
            return Err(PlannerError::Config(format!("bezier order must be >= 4, got {}", self.order)));
        }
        if self.steps < 2 {
            return Err(PlannerError::Config(format!("horizon must have >= 2 steps, got {}", self.steps)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(PlannerError::Config(format!("duration must be positive, got {}", self.duration)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps as f64
    }

    /// Normalized time of sample `k` (1-based, k = 1..=steps).
    pub fn nu(&self, k: usize) -> f64 {
        k as f64 / self.steps as f64
    }
}

fn exact_binomial(n: usize, k: usize) -> u64 {
    // n <= 20 keeps every intermediate product well inside u64.
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u64 / (j + 1) as u64;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= EXACT_BINOMIAL_MAX {
        return exact_binomial(n, k) as f64;
    }
    let k = k.min(n - k);
    let ln: f64 = (0..k).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum();
    ln.exp()
}

/// Bernstein polynomial `C(n,i) nu^i (1-nu)^(n-i)`.
pub fn bernstein(i: usize, n: usize, nu: f64) -> Result<f64> {
    if i > n {
        return Err(PlannerError::Domain(format!("bernstein index {i} exceeds order {n}")));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(PlannerError::Domain(format!("normalized time {nu} outside [0,1]")));
    }
    Ok(bernstein_unchecked(i as isize, n, nu))
}

fn bernstein_unchecked(i: isize, n: usize, nu: f64) -> f64 {
    if i < 0 || i as usize > n {
        return 0.0;
    }
    let i = i as usize;
    if n > EXACT_BINOMIAL_MAX {
        // log-space keeps huge binomials from overflowing against tiny powers
        if (nu == 0.0 && i > 0) || (nu == 1.0 && i < n) {
            return 0.0;
        }
        if nu == 0.0 || nu == 1.0 {
            return 1.0;
        }
        let ln = binomial(n, i).ln() + i as f64 * nu.ln() + (n - i) as f64 * (1.0 - nu).ln();
        return ln.exp();
    }
    binomial(n, i) * nu.powi(i as i32) * (1.0 - nu).powi((n - i) as i32)
}

/// `p`-th derivative of `B_{i,n}` with respect to normalized time.
pub fn bernstein_derivative(i: usize, n: usize, p: usize, nu: f64) -> f64 {
    if p > n {
        return 0.0;
    }
    let falling: f64 = (0..p).map(|j| (n - j) as f64).product();
    let mut sum = 0.0;
    for j in 0..=p {
        let sign = if (p - j) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binomial(p, j) * bernstein_unchecked(i as isize - j as isize, n - p, nu);
    }
    falling * sum
}

/// Basis row `[d^p B_{0,n}/dt^p .. d^p B_{n,n}/dt^p]` at normalized time `nu`, in physical units.
pub fn basis_row(spec: &BezierSpec, nu: f64, derivative: usize) -> DVector<f64> {
    let scale = spec.duration.powi(derivative as i32);
    DVector::from_iterator(
        spec.order + 1,
        (0..=spec.order).map(|i| bernstein_derivative(i, spec.order, derivative, nu) / scale),
    )
}

/// Bernstein values and their time derivatives sampled at `t = k dt`, `k = 1..N`.
/// Each matrix is `(n+1) x N`.
#[derive(Debug, Clone)]
pub struct BasisMatrices {
    pub spec: BezierSpec,
    pub position: DMatrix<f64>,
    pub velocity: DMatrix<f64>,
    pub acceleration: DMatrix<f64>,
    pub jerk: DMatrix<f64>,
}

impl BasisMatrices {
    pub fn order(&self) -> usize {
        self.spec.order
    }

    pub fn steps(&self) -> usize {
        self.spec.steps
    }

    pub fn by_derivative(&self, p: usize) -> &DMatrix<f64> {
        match p {
            0 => &self.position,
            1 => &self.velocity,
            2 => &self.acceleration,
            3 => &self.jerk,
            _ => panic!("derivative order {p} not tabulated"),
        }
    }
}

pub fn build_basis(spec: &BezierSpec) -> Result<BasisMatrices> {
    spec.validate()?;
    let rows = spec.order + 1;
    let cols = spec.steps;
    let mut mats: Vec<DMatrix<f64>> = (0..4).map(|_| DMatrix::zeros(rows, cols)).collect();
    for k in 1..=cols {
        let nu = spec.nu(k);
        for (p, m) in mats.iter_mut().enumerate() {
            m.set_column(k - 1, &basis_row(spec, nu, p));
        }
    }
    let jerk = mats.pop().unwrap();
    let acceleration = mats.pop().unwrap();
    let velocity = mats.pop().unwrap();
    let position = mats.pop().unwrap();
    Ok(BasisMatrices { spec: *spec, position, velocity, acceleration, jerk })
}

/// A trajectory sampled on the planning grid, `k = 1..N`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub heading: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub speed: Vec<f64>,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn project(basis: &DMatrix<f64>, points: &DVector<f64>) -> Vec<f64> {
    (basis.transpose() * points).iter().copied().collect()
}

pub fn sample_trajectory(
    points_x: &DVector<f64>,
    points_y: &DVector<f64>,
    points_theta: &DVector<f64>,
    basis: &BasisMatrices,
) -> Result<SampledTrajectory> {
    let rows = basis.order() + 1;
    for (name, v) in [("x", points_x), ("y", points_y), ("theta", points_theta)] {
        if v.len() != rows {
            return Err(PlannerError::Shape(format!(
                "{name} control points have {} entries, basis expects {rows}",
                v.len()
            )));
        }
    }
    let vx = project(&basis.velocity, points_x);
    let vy = project(&basis.velocity, points_y);
    let speed = vx.iter().zip(&vy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    Ok(SampledTrajectory {
        x: project(&basis.position, points_x),
        y: project(&basis.position, points_y),
        heading: project(&basis.position, points_theta),
        vx,
        vy,
        ax: project(&basis.acceleration, points_x),
        ay: project(&basis.acceleration, points_y),
        jx: project(&basis.jerk, points_x),
        jy: project(&basis.jerk, points_y),
        speed,
    })
}

/// Evaluate one axis of a curve and its first three time derivatives at `nu`.
pub fn evaluate_at(spec: &BezierSpec, points: &DVector<f64>, nu: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (p, slot) in out.iter_mut().enumerate() {
        *slot = basis_row(spec, nu, p).dot(points);
    }
    out
}

/// Control points of the straight segment from `start` to `end`; reproduces exactly linear motion.
pub fn linear_control_points(order: usize, start: f64, end: f64) -> DVector<f64> {
    DVector::from_iterator(order + 1, (0..=order).map(|i| start + (end - start) * i as f64 / order as f64))
}
