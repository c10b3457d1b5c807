//! Candidate scoring and selection.

use serde::{Deserialize, Serialize};

use crate::bezier::SampledTrajectory;
use crate::error::{PlannerError, Result};
use crate::traffic::nearest_lane;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationWeights {
    pub goal: f64,
    pub lateral: f64,
    pub safety: f64,
    pub comfort: f64,
    pub consistency: f64,
}

impl Default for EvaluationWeights {
    fn default() -> Self {
        Self { goal: 200.0, lateral: 20.0, safety: 40.0, comfort: 20.0, consistency: 20.0 }
    }
}

impl EvaluationWeights {
    pub fn as_array(&self) -> [f64; 5] {
        [self.goal, self.lateral, self.safety, self.comfort, self.consistency]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let [g, l, s, c, m] = self.as_array().map(|w| w * factor);
        Self { goal: g, lateral: l, safety: s, comfort: c, consistency: m }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(PlannerError::Config(format!("evaluation weights must be non-negative: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationContext {
    pub target_speed: f64,
    pub lane_centers: Vec<f64>,
    /// Lane the EV currently occupies.
    pub current_lane: usize,
    pub last_lane: usize,
    pub last_maneuver: i8,
    pub decay: f64,
    /// Obstacles in the problem, used to normalize the safety residual.
    pub obstacles: usize,
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub target_lane: usize,
    pub maneuver: i8,
    pub costs: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub maneuver: i8,
    pub target_lane: usize,
    pub scores: Vec<f64>,
}

pub fn maneuver_label(target_lane: usize, current_lane: usize) -> i8 {
    (target_lane as i64 - current_lane as i64).clamp(-1, 1) as i8
}

fn decayed_sum(values: impl Iterator<Item = f64>, decay: f64) -> f64 {
    let mut w = 1.0;
    let mut total = 0.0;
    for v in values {
        total += w * v;
        w *= decay;
    }
    total
}

pub fn goal_cost(traj: &SampledTrajectory, target_speed: f64, decay: f64) -> f64 {
    decayed_sum(traj.speed.iter().map(|v| (v - target_speed).abs()), decay)
}

pub fn lateral_cost(traj: &SampledTrajectory, lane_center: f64, decay: f64) -> f64 {
    decayed_sum(traj.y.iter().map(|y| (y - lane_center).abs()), decay)
}

pub fn comfort_cost(traj: &SampledTrajectory) -> f64 {
    let n = traj.jx.len() + traj.jy.len();
    if n == 0 {
        return 0.0;
    }
    traj.jx.iter().chain(&traj.jy).map(|j| j.abs()).sum::<f64>() / n as f64
}

/// `[goal, lateral, safety, comfort, consistency]` of one trajectory aimed at `goal_y`.
pub fn sub_costs(traj: &SampledTrajectory, goal_y: f64, obstacle_residual: f64, ctx: &EvaluationContext) -> Candidate {
    // A maneuver moves at most one lane; goals further out still count against the adjacent lane.
    let maneuver = maneuver_label(nearest_lane(goal_y, &ctx.lane_centers), ctx.current_lane);
    let target_lane = (ctx.current_lane as i64 + maneuver as i64).clamp(0, ctx.lane_centers.len().saturating_sub(1) as i64) as usize;
    let center = ctx.lane_centers.get(target_lane).copied().unwrap_or(goal_y);
    let normalizer = (traj.len() * ctx.obstacles) as f64;
    let safety = if ctx.obstacles == 0 { 0.0 } else { obstacle_residual / normalizer };
    let costs = [
        goal_cost(traj, ctx.target_speed, ctx.decay),
        lateral_cost(traj, center, ctx.decay),
        safety,
        comfort_cost(traj),
        if target_lane == ctx.last_lane { 0.0 } else { 1.0 },
    ];
    Candidate { target_lane, maneuver, costs }
}

pub fn score(costs: &[f64; 5], weights: &EvaluationWeights) -> f64 {
    costs.iter().zip(weights.as_array()).map(|(f, w)| f * w).sum()
}

/// Argmin of the weighted score; exact ties go to the last maneuver, then the lowest index.
pub fn select(candidates: &[Candidate], weights: &EvaluationWeights, last_maneuver: i8) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(PlannerError::Shape("no candidates to select from".into()));
    }
    let scores: Vec<f64> = candidates.iter().map(|c| score(&c.costs, weights)).collect();
    let key = |i: usize| (scores[i], candidates[i].maneuver != last_maneuver, i);
    let index = (0..candidates.len())
        .min_by(|&a, &b| {
            let (sa, ma, ia) = key(a);
            let (sb, mb, ib) = key(b);
            sa.total_cmp(&sb).then(ma.cmp(&mb)).then(ia.cmp(&ib))
        })
        .expect("non-empty");
    Ok(Selection { index, maneuver: candidates[index].maneuver, target_lane: candidates[index].target_lane, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(speed: f64, y: f64, n: usize) -> SampledTrajectory {
        SampledTrajectory {
            x: (0..n).map(|k| k as f64 * speed * 0.1).collect(),
            y: vec![y; n],
            heading: vec![0.0; n],
            vx: vec![speed; n],
            vy: vec![0.0; n],
            ax: vec![0.0; n],
            ay: vec![0.0; n],
            jx: vec![0.0; n],
            jy: vec![0.0; n],
            speed: vec![speed; n],
        }
    }

    fn ctx(last_lane: usize, decay: f64) -> EvaluationContext {
        EvaluationContext {
            target_speed: 15.0,
            lane_centers: vec![-3.75, 0.0, 3.75],
            current_lane: 1,
            last_lane,
            last_maneuver: 0,
            decay,
            obstacles: 1,
        }
    }

    fn cand(costs: [f64; 5], maneuver: i8) -> Candidate {
        Candidate { target_lane: 1, maneuver, costs }
    }

    #[test]
    fn perfect_trajectory_costs_nothing() {
        let c = sub_costs(&flat(15.0, 0.0, 50), 0.0, 0.0, &ctx(1, 0.97));
        assert_eq!(c.costs, [0.0; 5]);
        assert_eq!(c.maneuver, 0);
    }

    #[test]
    fn lane_switch_toggles_consistency() {
        let c = sub_costs(&flat(15.0, 0.0, 50), 0.0, 0.0, &ctx(2, 0.97));
        assert_eq!(c.costs, [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn undecayed_speed_deficit() {
        let c = sub_costs(&flat(14.0, 0.0, 50), 0.0, 0.0, &ctx(1, 1.0));
        assert!((c.costs[0] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn maneuver_labels_clamp() {
        assert_eq!(maneuver_label(4, 1), 1);
        assert_eq!(maneuver_label(0, 2), -1);
        assert_eq!(maneuver_label(2, 2), 0);
    }

    #[test]
    fn single_candidate_wins() {
        let s = select(&[cand([1e9; 5], 1)], &EvaluationWeights::default(), 0).unwrap();
        assert_eq!(s.index, 0);
    }

    #[test]
    fn consistency_breaks_the_tie() {
        let w = EvaluationWeights::default();
        let s = select(&[cand([1.0, 1.0, 0.0, 0.0, 1.0], 1), cand([1.0, 1.0, 0.0, 0.0, 0.0], 0)], &w, 0).unwrap();
        assert_eq!(s.index, 1);
    }

    #[test]
    fn plain_argmin() {
        let w = EvaluationWeights { goal: 1.0, lateral: 0.0, safety: 0.0, comfort: 0.0, consistency: 0.0 };
        let cs: Vec<_> = [10.0, 9.5, 12.0, 30.0, 11.0].iter().map(|&g| cand([g, 0.0, 0.0, 0.0, 0.0], 0)).collect();
        assert_eq!(select(&cs, &w, 0).unwrap().index, 1);
    }

    #[test]
    fn exact_tie_prefers_last_maneuver_then_index() {
        let w = EvaluationWeights::default();
        let cs = [cand([1.0; 5], -1), cand([1.0; 5], 1), cand([1.0; 5], 1)];
        assert_eq!(select(&cs, &w, 1).unwrap().index, 1);
        assert_eq!(select(&cs, &w, 0).unwrap().index, 0);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(select(&[], &EvaluationWeights::default(), 0).is_err());
    }
}
