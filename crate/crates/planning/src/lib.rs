//! Exploration planning over classical and uncertainty frontiers: a greedy
//! RRT, an RRT* whose cost rewards landmark references, objective selection
//! and the stopping rule.

pub mod cost;
pub mod error;
pub mod map;
pub mod objective;
pub mod rrt;

pub use cost::{node_cost, BelievedLandmarks, LandmarkVisibility, NoLandmarks, PlanNode, PlannerParams, StartState};
pub use error::{PlanningError, Result};
pub use map::PlanningMap;
pub use objective::{select_objective, stopping_criterion, Objective, PlannerKind, Selection};
pub use rrt::{plan_greedy_rrt, plan_rrt_star_uncertainty, Path, RrtStarTree};
