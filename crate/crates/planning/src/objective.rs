//! Choosing the next exploration objective among frontier clusters.

use serde::{Deserialize, Serialize};
use siren_core::analysis::{FrontierCluster, FrontierKind, FrontierSet};
use siren_core::exec::{map_slice, Execution};
use siren_core::grid::Point;

use crate::cost::{LandmarkVisibility, PlannerParams, StartState};
use crate::map::PlanningMap;
use crate::rrt::{plan_greedy_rrt, plan_rrt_star_uncertainty, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerKind {
    GreedyRrt,
    UncertaintyRrtStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: FrontierKind,
    pub target: Point,
    pub cluster: FrontierCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub objective: Objective,
    pub path: Path,
}

fn probe_seed(seed: u64, cluster: usize) -> u64 {
    seed ^ (cluster as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Plans to every cluster of kind `mode` and keeps the cheapest reachable one.
#[allow(clippy::too_many_arguments)]
pub fn select_objective(
    frontiers: &FrontierSet,
    start: StartState,
    mode: FrontierKind,
    planner: PlannerKind,
    map: &PlanningMap,
    visibility: &dyn LandmarkVisibility,
    params: &PlannerParams,
    exec: Execution,
) -> Option<Selection> {
    let candidates: Vec<&FrontierCluster> = frontiers.clusters_of(mode).collect();
    let g = &map.geometry;
    let probes = map_slice(&candidates, exec, |cluster| {
        let target = g.cell_to_world(cluster.target);
        let probe = PlannerParams { seed: probe_seed(params.seed, cluster.id), ..params.clone() };
        let path = match planner {
            PlannerKind::GreedyRrt => plan_greedy_rrt(start.position, target, map, &probe),
            PlannerKind::UncertaintyRrtStar => plan_rrt_star_uncertainty(start, target, map, visibility, &probe),
        };
        path.ok().map(|path| Selection {
            objective: Objective { kind: mode, target, cluster: (*cluster).clone() },
            path,
        })
    });
    probes
        .into_iter()
        .flatten()
        .min_by(|a, b| {
            a.path.cost().total_cmp(&b.path.cost()).then(a.objective.cluster.id.cmp(&b.objective.cluster.id))
        })
}

/// True when no objective of kind `mode` is reachable.
#[allow(clippy::too_many_arguments)]
pub fn stopping_criterion(
    frontiers: &FrontierSet,
    start: StartState,
    mode: FrontierKind,
    planner: PlannerKind,
    map: &PlanningMap,
    visibility: &dyn LandmarkVisibility,
    params: &PlannerParams,
    exec: Execution,
) -> bool {
    select_objective(frontiers, start, mode, planner, map, visibility, params, exec).is_none()
}
