//! Sampling-based planners over a [`PlanningMap`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use siren_core::grid::Point;

use crate::cost::{extend, LandmarkVisibility, PlanNode, PlannerParams, StartState};
use crate::error::{PlanningError, Result};
use crate::map::PlanningMap;

/// Polyline from the start to the goal region. `waypoints` excludes the start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub start: PlanNode,
    pub waypoints: Vec<PlanNode>,
}

impl Path {
    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |n| n.d)
    }

    pub fn cost(&self) -> f64 {
        self.waypoints.last().map_or(self.start.cost, |n| n.cost)
    }

    pub fn points(&self) -> Vec<Point> {
        std::iter::once(self.start.position).chain(self.waypoints.iter().map(|n| n.position)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn sample(rng: &mut ChaCha8Rng, map: &PlanningMap, goal: Point, bias: f64) -> Option<Point> {
    if rng.random::<f64>() < bias {
        return Some(goal);
    }
    let cells = map.free_cells();
    if cells.is_empty() {
        return None;
    }
    let g = &map.geometry;
    let c = g.cell_to_world(g.cell(cells[rng.random_range(0..cells.len())]));
    let h = 0.5 * g.resolution;
    Some([c[0] + rng.random_range(-h..h), c[1] + rng.random_range(-h..h)])
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

fn nearest(nodes: &[PlanNode], p: Point) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, n) in nodes.iter().enumerate() {
        let d = dist2(n.position, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn steer(from: Point, to: Point, step: f64) -> Point {
    let d = dist(from, to);
    if d <= step {
        return to;
    }
    [from[0] + (to[0] - from[0]) * step / d, from[1] + (to[1] - from[1]) * step / d]
}

fn trace(nodes: &[PlanNode], mut i: usize) -> Vec<usize> {
    let mut chain = vec![i];
    while let Some(p) = nodes[i].parent {
        chain.push(p);
        i = p;
    }
    chain.reverse();
    chain
}

/// Rebuilds node bookkeeping along `points` with no landmark references.
fn bookkeep(start: PlanNode, points: &[Point], params: &PlannerParams) -> Path {
    let mut waypoints: Vec<PlanNode> = Vec::with_capacity(points.len());
    for (k, &p) in points.iter().enumerate() {
        let parent = if k == 0 { start } else { waypoints[k - 1] };
        waypoints.push(extend(&parent, k, p, None, params));
    }
    Path { start, waypoints }
}

/// Plain RRT that stops at the first branch reaching the goal region, then
/// shortcuts the branch to the shortest collision-free chord sequence.
pub fn plan_greedy_rrt(start: Point, goal: Point, map: &PlanningMap, params: &PlannerParams) -> Result<Path> {
    params.validate()?;
    let root = StartState::at(start).root(params);
    if dist(start, goal) <= params.goal_tolerance {
        return Ok(Path { start: root, waypoints: Vec::new() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut nodes = vec![root];
    for _ in 0..params.max_iterations {
        let Some(s) = sample(&mut rng, map, goal, params.goal_bias) else { break };
        let near = nearest(&nodes, s);
        let p = steer(nodes[near].position, s, params.step_length);
        if !map.is_free(p) || !map.segment_free(nodes[near].position, p) {
            continue;
        }
        let parent = nodes[near];
        nodes.push(extend(&parent, near, p, None, params));
        if dist(p, goal) <= params.goal_tolerance {
            let chain: Vec<Point> = trace(&nodes, nodes.len() - 1).into_iter().map(|i| nodes[i].position).collect();
            let mut kept = vec![chain[0]];
            let mut i = 0;
            while i + 1 < chain.len() {
                let j = (i + 1..chain.len()).rev().find(|&j| map.segment_free(chain[i], chain[j])).unwrap_or(i + 1);
                kept.push(chain[j]);
                i = j;
            }
            return Ok(bookkeep(root, &kept[1..], params));
        }
    }
    Err(PlanningError::NoPathFound { iterations: params.max_iterations })
}

/// RRT* tree whose parent choice and rewiring minimise the landmark-aware cost.
#[derive(Debug, Clone)]
pub struct RrtStarTree {
    pub nodes: Vec<PlanNode>,
    children: Vec<Vec<usize>>,
    seen: Vec<Option<f64>>,
    pub rewires: usize,
}

impl RrtStarTree {
    pub fn new(start: StartState, visibility: &dyn LandmarkVisibility, params: &PlannerParams) -> Self {
        let seen = visibility.last_visible(start.position);
        let root = match seen {
            Some(s) => {
                let mut n = start.root(params);
                n.d_odo = 0.0;
                n.sigma_l = s;
                n.cost = n.recompute_cost(params);
                n
            }
            None => start.root(params),
        };
        Self { nodes: vec![root], children: vec![Vec::new()], seen: vec![seen], rewires: 0 }
    }

    /// One sample-steer-connect-rewire round. Returns the new node index, if any.
    pub fn iterate(
        &mut self,
        rng: &mut ChaCha8Rng,
        goal: Point,
        map: &PlanningMap,
        visibility: &dyn LandmarkVisibility,
        params: &PlannerParams,
    ) -> Option<usize> {
        let s = sample(rng, map, goal, params.goal_bias)?;
        let nearest_index = nearest(&self.nodes, s);
        let p = steer(self.nodes[nearest_index].position, s, params.step_length);
        if !map.is_free(p) || !map.segment_free(self.nodes[nearest_index].position, p) {
            return None;
        }
        let seen = visibility.last_visible(p);
        // k-nearest variant: at most ceil(2e ln n) neighbours inside the radius.
        let k = (2.0 * std::f64::consts::E * (self.nodes.len() as f64 + 1.0).ln()).ceil() as usize;
        let mut near: Vec<(f64, usize)> = (0..self.nodes.len())
            .map(|i| (dist2(self.nodes[i].position, p), i))
            .filter(|&(d, _)| d <= params.rewire_radius * params.rewire_radius)
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if near.len() > k {
            near.select_nth_unstable_by(k, order);
            near.truncate(k);
        }
        near.sort_by(order);
        let near: Vec<usize> = near
            .into_iter()
            .map(|(_, i)| i)
            .filter(|&i| i == nearest_index || map.segment_free(self.nodes[i].position, p))
            .collect();
        let mut best = extend(&self.nodes[nearest_index], nearest_index, p, seen, params);
        for &i in &near {
            let cand = extend(&self.nodes[i], i, p, seen, params);
            if (cand.cost, cand.d) < (best.cost, best.d) {
                best = cand;
            }
        }
        let new = self.nodes.len();
        let parent = best.parent.expect("extended nodes have parents");
        self.nodes.push(best);
        self.children.push(Vec::new());
        self.seen.push(seen);
        self.children[parent].push(new);

        let ancestors = trace(&self.nodes, new);
        for &i in &near {
            if i == parent || ancestors.contains(&i) {
                continue;
            }
            let moved = extend(&self.nodes[new], new, self.nodes[i].position, self.seen[i], params);
            if moved.cost < self.nodes[i].cost {
                self.try_rewire(i, moved, params);
            }
        }
        Some(new)
    }

    /// Reparents `i` when no node in its subtree gets more expensive.
    fn try_rewire(&mut self, i: usize, moved: PlanNode, params: &PlannerParams) {
        let mut updates = vec![(i, moved)];
        let mut k = 0;
        while k < updates.len() {
            let (idx, node) = updates[k];
            if node.cost > self.nodes[idx].cost {
                return;
            }
            for &c in &self.children[idx] {
                let child = extend(&node, idx, self.nodes[c].position, self.seen[c], params);
                updates.push((c, child));
            }
            k += 1;
        }
        let old_parent = self.nodes[i].parent.expect("non-root");
        self.children[old_parent].retain(|&c| c != i);
        let new_parent = moved.parent.expect("non-root");
        self.children[new_parent].push(i);
        for (idx, node) in updates {
            self.nodes[idx] = node;
        }
        self.rewires += 1;
    }

    /// Cheapest node inside the goal region.
    pub fn best_goal(&self, goal: Point, tolerance: f64) -> Option<usize> {
        (0..self.nodes.len())
            .filter(|&i| dist(self.nodes[i].position, goal) <= tolerance)
            .min_by(|&a, &b| (self.nodes[a].cost, self.nodes[a].d).partial_cmp(&(self.nodes[b].cost, self.nodes[b].d)).expect("finite"))
    }

    pub fn path_to(&self, i: usize) -> Path {
        let chain = trace(&self.nodes, i);
        let waypoints = chain[1..].iter().map(|&k| self.nodes[k]).collect();
        Path { start: self.nodes[0], waypoints }
    }
}

/// RRT* with the landmark-aware cost. Runs the full iteration budget and
/// returns the cheapest branch into the goal region.
pub fn plan_rrt_star_uncertainty(
    start: StartState,
    goal: Point,
    map: &PlanningMap,
    visibility: &dyn LandmarkVisibility,
    params: &PlannerParams,
) -> Result<Path> {
    params.validate()?;
    let mut tree = RrtStarTree::new(start, visibility, params);
    if dist(start.position, goal) <= params.goal_tolerance {
        return Ok(tree.path_to(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.max_iterations {
        tree.iterate(&mut rng, goal, map, visibility, params);
    }
    tree.best_goal(goal, params.goal_tolerance)
        .map(|i| tree.path_to(i))
        .ok_or(PlanningError::NoPathFound { iterations: params.max_iterations })
}
