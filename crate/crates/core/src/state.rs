use serde::{Deserialize, Serialize};

/// Ego vehicle state `[p_x, p_y, theta, theta_dot, v, a_x, a_y, j_x, j_y]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub px: f64,
    pub py: f64,
    pub heading: f64,
    pub yaw_rate: f64,
    pub speed: f64,
    pub ax: f64,
    pub ay: f64,
    pub jx: f64,
    pub jy: f64,
}

impl EgoState {
    pub fn cruising(px: f64, py: f64, speed: f64) -> Self {
        Self { px, py, speed, ..Default::default() }
    }

    pub fn vx(&self) -> f64 {
        self.speed * self.heading.cos()
    }

    pub fn vy(&self) -> f64 {
        self.speed * self.heading.sin()
    }

    pub fn position(&self) -> (f64, f64) {
        (self.px, self.py)
    }

    pub fn is_finite(&self) -> bool {
        [self.px, self.py, self.heading, self.yaw_rate, self.speed, self.ax, self.ay, self.jx, self.jy]
            .iter()
            .all(|v| v.is_finite())
    }
}
