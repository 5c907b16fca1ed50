//! Node bookkeeping and the landmark-aware path cost.

use serde::{Deserialize, Serialize};
use siren_core::grid::Point;
use siren_sim::{KfState, WorldModel};

use crate::error::{PlanningError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Grid cell size `c` (m).
    pub cell_size: f64,
    /// Process-noise conversion factor.
    pub q_tilde: f64,
    pub step_length: f64,
    pub rewire_radius: f64,
    pub max_iterations: usize,
    pub goal_tolerance: f64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
    /// Cells closer than this to an obstacle are not traversable (m).
    pub robot_radius: f64,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            cell_size: 0.1,
            q_tilde: 0.01,
            step_length: 0.25,
            rewire_radius: 1.0,
            max_iterations: 1500,
            goal_tolerance: 0.3,
            goal_bias: 0.1,
            robot_radius: 0.2,
            seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.cell_size, self.q_tilde, self.step_length, self.rewire_radius, self.goal_tolerance];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.max_iterations == 0 {
            return Err(PlanningError::InvalidParameter("planner lengths, factors and budget must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.goal_bias) || !(self.robot_radius >= 0.0) {
            return Err(PlanningError::InvalidParameter("goal_bias in [0, 1), robot_radius >= 0".into()));
        }
        Ok(())
    }

    /// Weight of the landmark term, `2 / (c Q)`.
    pub fn landmark_weight(&self) -> f64 {
        2.0 / (self.cell_size * self.q_tilde)
    }
}

/// A tree node with the bookkeeping the cost needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    pub position: Point,
    pub parent: Option<usize>,
    /// Path length from the start (m).
    pub d: f64,
    /// Distance travelled since the last landmark reference (m).
    pub d_odo: f64,
    /// Geometric-mean deviation of the last referenced landmark (m).
    pub sigma_l: f64,
    pub cost: f64,
}

impl PlanNode {
    pub fn recompute_cost(&self, params: &PlannerParams) -> f64 {
        self.d + self.d_odo + self.sigma_l * params.landmark_weight()
    }
}

/// Agent state a plan starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartState {
    pub position: Point,
    pub d_odo: f64,
    pub sigma_l: f64,
}

impl StartState {
    pub fn at(position: Point) -> Self {
        Self { position, d_odo: 0.0, sigma_l: 0.0 }
    }

    pub(crate) fn root(&self, params: &PlannerParams) -> PlanNode {
        let mut n = PlanNode { position: self.position, parent: None, d: 0.0, d_odo: self.d_odo, sigma_l: self.sigma_l, cost: 0.0 };
        n.cost = n.recompute_cost(params);
        n
    }
}

/// Which landmarks the agent expects to see from a position.
pub trait LandmarkVisibility: Sync {
    /// Deviations of the landmarks visible from `p`, in reference order.
    fn visible(&self, p: Point) -> Vec<f64>;

    /// Deviation of the last visible landmark, if any.
    fn last_visible(&self, p: Point) -> Option<f64> {
        self.visible(p).last().copied()
    }
}

pub struct NoLandmarks;

impl LandmarkVisibility for NoLandmarks {
    fn visible(&self, _: Point) -> Vec<f64> {
        Vec::new()
    }
}

/// Landmarks as the filter believes them, occluded by the world walls and
/// limited to the sensor range. Reference order is ascending id.
#[derive(Debug, Clone)]
pub struct BelievedLandmarks<'a> {
    pub landmarks: Vec<(u32, Point, f64)>,
    pub range: f64,
    pub world: &'a WorldModel,
}

impl<'a> BelievedLandmarks<'a> {
    pub fn from_filter(kf: &KfState, world: &'a WorldModel, range: f64) -> Self {
        let landmarks = kf
            .landmark_ids()
            .filter_map(|id| {
                let (pos, _) = kf.landmark(id)?;
                Some((id, pos, kf.landmark_sigma(id)?))
            })
            .collect();
        Self { landmarks, range, world }
    }
}

impl LandmarkVisibility for BelievedLandmarks<'_> {
    fn visible(&self, p: Point) -> Vec<f64> {
        self.landmarks
            .iter()
            .filter(|(_, q, _)| (q[0] - p[0]).hypot(q[1] - p[1]) <= self.range && self.world.line_of_sight(p, *q))
            .map(|&(_, _, s)| s)
            .collect()
    }
}

/// Extends `parent` to `child` given the landmark seen there, if any.
pub(crate) fn extend(parent: &PlanNode, parent_index: usize, child: Point, seen: Option<f64>, params: &PlannerParams) -> PlanNode {
    let len = (child[0] - parent.position[0]).hypot(child[1] - parent.position[1]);
    let mut n = PlanNode {
        position: child,
        parent: Some(parent_index),
        d: parent.d + len,
        d_odo: parent.d_odo + len,
        sigma_l: parent.sigma_l,
        cost: 0.0,
    };
    if let Some(s) = seen {
        n.d_odo = 0.0;
        n.sigma_l = s;
    }
    n.cost = n.recompute_cost(params);
    n
}

/// Child node reached from `parent` (stored at `parent_index`) by a straight segment.
pub fn node_cost(
    parent: &PlanNode,
    parent_index: usize,
    child: Point,
    visibility: &dyn LandmarkVisibility,
    params: &PlannerParams,
) -> PlanNode {
    extend(parent, parent_index, child, visibility.last_visible(child), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<f64>);
    impl LandmarkVisibility for Fixed {
        fn visible(&self, _: Point) -> Vec<f64> {
            self.0.clone()
        }
    }

    fn node(d: f64, d_odo: f64, sigma_l: f64, params: &PlannerParams) -> PlanNode {
        let mut n = PlanNode { position: [0.0, 0.0], parent: None, d, d_odo, sigma_l, cost: 0.0 };
        n.cost = n.recompute_cost(params);
        n
    }

    #[test]
    fn hand_computed_cost() {
        let params = PlannerParams::default();
        assert!((node(3.0, 2.0, 0.05, &params).cost - 105.0).abs() < 1e-9);
    }

    #[test]
    fn referenceless_segment_grows_both_distances() {
        let params = PlannerParams::default();
        let p = node(1.0, 0.5, 0.05, &params);
        let c = node_cost(&p, 0, [3.0, 4.0], &NoLandmarks, &params);
        assert_eq!((c.d, c.d_odo, c.sigma_l), (6.0, 5.5, 0.05));
        assert_eq!(c.parent, Some(0));
    }

    #[test]
    fn exact_landmark_resets_to_distance() {
        let params = PlannerParams::default();
        let p = node(1.0, 0.5, 0.05, &params);
        let c = node_cost(&p, 0, [0.0, 2.0], &Fixed(vec![0.2, 0.0]), &params);
        assert_eq!(c.d_odo, 0.0);
        assert_eq!(c.cost, c.d);
    }
}
