//! Discrete-time barrier functions over a polar ellipse around each vehicle.

use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};

/// Margin applied to the strict forward-invariance check.
pub const STRICT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyEllipse {
    pub lx: f64,
    pub ly: f64,
}

impl Default for SafetyEllipse {
    fn default() -> Self {
        Self { lx: 6.0, ly: 5.5 }
    }
}

impl SafetyEllipse {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(PlannerError::Config(format!("ellipse axes must be positive, got ({lx}, {ly})")));
        }
        Ok(Self { lx, ly })
    }

    /// Point at scaling `d` and angle `omega` around `center`.
    pub fn point(&self, center: (f64, f64), d: f64, omega: f64) -> (f64, f64) {
        (center.0 + self.lx * d * omega.cos(), center.1 + self.ly * d * omega.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSample {
    pub d: f64,
    pub h: f64,
    pub omega: f64,
}

pub fn ellipse_coords(ev: (f64, f64), hv: (f64, f64), ellipse: &SafetyEllipse) -> BarrierSample {
    let dx = ev.0 - hv.0;
    let dy = ev.1 - hv.1;
    if dx == 0.0 && dy == 0.0 {
        return BarrierSample { d: 0.0, h: -1.0, omega: 0.0 };
    }
    let d = ((dx / ellipse.lx).powi(2) + (dy / ellipse.ly).powi(2)).sqrt();
    let omega = ellipse_angle(dx, dy, ellipse.lx, ellipse.ly);
    BarrierSample { d, h: d - 1.0, omega }
}

/// `atan2(lx*dy, ly*dx)`, zero when both offsets vanish.
pub fn ellipse_angle(dx: f64, dy: f64, lx: f64, ly: f64) -> f64 {
    if dx == 0.0 && dy == 0.0 {
        0.0
    } else {
        (lx * dy).atan2(ly * dx)
    }
}

/// Smallest admissible next barrier value given the previous one.
pub fn dcbf_bound(h_prev: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * h_prev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    pub alpha: Vec<f64>,
}

impl BarrierSchedule {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn constant(alpha: f64, steps: usize) -> Self {
        Self { alpha: vec![alpha; steps] }
    }
}

pub fn linear_schedule(alpha0: f64, steps: usize) -> Result<BarrierSchedule> {
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(PlannerError::Config(format!("alpha0 must lie in (0,1], got {alpha0}")));
    }
    if steps < 2 {
        return Err(PlannerError::Config(format!("schedule needs >= 2 steps, got {steps}")));
    }
    let slope = (1.0 - alpha0) / (steps - 1) as f64;
    let mut alpha: Vec<f64> = (0..steps).map(|k| alpha0 + k as f64 * slope).collect();
    alpha[steps - 1] = 1.0;
    Ok(BarrierSchedule { alpha })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub first_violation: Option<usize>,
}

/// `alpha[k]` governs the transition from `h[k-1]` to `h[k]`; shorter schedules reuse their last entry.
fn alpha_at(schedule: &BarrierSchedule, k: usize) -> f64 {
    schedule.alpha[k.min(schedule.alpha.len() - 1)]
}

pub fn certify_invariance(h_series: &[f64], schedule: &BarrierSchedule) -> Result<InvarianceReport> {
    if h_series.is_empty() || schedule.is_empty() {
        return Err(PlannerError::Domain("empty barrier series or schedule".into()));
    }
    if h_series[0] < 0.0 {
        return Err(PlannerError::Domain(format!("invariance needs h[0] >= 0, got {}", h_series[0])));
    }
    for k in 1..h_series.len() {
        let bound = dcbf_bound(h_series[k - 1], alpha_at(schedule, k));
        if h_series[k] <= bound + STRICT_MARGIN {
            return Ok(InvarianceReport { invariant: false, first_violation: Some(k) });
        }
    }
    Ok(InvarianceReport { invariant: true, first_violation: None })
}

pub fn lyapunov_value(h: f64) -> f64 {
    if h < 0.0 {
        h * h
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub converging: bool,
    /// `V(h[k]) / V(h[k-1])` for each step taken while the previous value was unsafe.
    pub contraction_factors: Vec<f64>,
}

pub fn certify_recovery(h_series: &[f64], schedule: &BarrierSchedule) -> Result<RecoveryReport> {
    if h_series.is_empty() || schedule.is_empty() {
        return Err(PlannerError::Domain("empty barrier series or schedule".into()));
    }
    let mut converging = true;
    let mut factors = Vec::new();
    for k in 1..h_series.len() {
        if h_series[k - 1] >= 0.0 {
            break;
        }
        let prev = lyapunov_value(h_series[k - 1]);
        let next = lyapunov_value(h_series[k]);
        let rate = (1.0 - alpha_at(schedule, k)).powi(2);
        factors.push(next / prev);
        // relative slack absorbs rounding in sequences built with the equality bound
        if next > rate * prev * (1.0 + 1e-12) {
            converging = false;
        }
    }
    Ok(RecoveryReport { converging, contraction_factors: factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn ellipse_examples() {
        let e = SafetyEllipse::default();
        let s = ellipse_coords((6.0, 0.0), (0.0, 0.0), &e);
        assert!((s.d - 1.0).abs() < 1e-15 && s.h.abs() < 1e-15 && s.omega == 0.0);
        let s = ellipse_coords((0.0, 11.0), (0.0, 0.0), &e);
        assert!((s.d - 2.0).abs() < 1e-15 && (s.omega - FRAC_PI_2).abs() < 1e-15);
        let s = ellipse_coords((12.0, 11.0), (0.0, 0.0), &e);
        assert!((s.d - 8f64.sqrt()).abs() < 1e-12 && (s.omega - FRAC_PI_4).abs() < 1e-12);
        let (px, py) = e.point((0.0, 0.0), s.d, s.omega);
        assert!((px - 12.0).abs() < 1e-12 && (py - 11.0).abs() < 1e-12);
    }

    #[test]
    fn coincident() {
        let s = ellipse_coords((3.0, 1.0), (3.0, 1.0), &SafetyEllipse::default());
        assert_eq!((s.d, s.h, s.omega), (0.0, -1.0, 0.0));
    }

    #[test]
    fn bounds() {
        assert!((dcbf_bound(2.0, 0.2) - 1.6).abs() < 1e-15);
        assert_eq!(dcbf_bound(0.0, 0.7), 0.0);
        assert!((dcbf_bound(-0.5, 0.2) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn schedules() {
        let s = linear_schedule(0.2, 5).unwrap();
        for (a, b) in s.alpha.iter().zip([0.2, 0.4, 0.6, 0.8, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(linear_schedule(0.2, 50).unwrap().alpha[49], 1.0);
        assert!(linear_schedule(1.0, 7).unwrap().alpha.iter().all(|&a| a == 1.0));
        assert!(linear_schedule(0.0, 7).is_err());
        assert!(linear_schedule(0.5, 1).is_err());
    }

    #[test]
    fn invariance_examples() {
        let a = BarrierSchedule::constant(0.2, 3);
        assert!(certify_invariance(&[2.0, 1.7, 1.5], &a).unwrap().invariant);
        let r = certify_invariance(&[2.0, 1.5, 1.4], &a).unwrap();
        assert_eq!(r.first_violation, Some(1));
        assert!(certify_invariance(&[0.0, 0.1, 0.2], &a).unwrap().invariant);
        assert!(certify_invariance(&[], &a).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(0.5), 0.0);
        assert_eq!(lyapunov_value(-0.5), 0.25);
        assert_eq!(lyapunov_value(0.0), 0.0);
    }

    #[test]
    fn recovery_examples() {
        let a = BarrierSchedule::constant(0.2, 3);
        let r = certify_recovery(&[-1.0, -0.8, -0.64], &a).unwrap();
        assert!(r.converging);
        for f in &r.contraction_factors {
            assert!((f - 0.64).abs() < 1e-12);
        }
        assert!(!certify_recovery(&[-1.0, -0.9], &a).unwrap().converging);
        assert!(certify_recovery(&[-1.0, 0.0], &a).unwrap().converging);
    }
}
