//! The sense, map, plan, move loop.

use std::collections::VecDeque;
use std::time::Instant;

use siren_core::analysis::{FrontierCluster, FrontierSet};
use siren_core::exec::{map_slice, Execution};
use siren_core::grid::{GridGeometry, Point};
use siren_planning::{select_objective, BelievedLandmarks, Objective, PlannerParams, PlanningMap, StartState};
use siren_sim::{SimConfig, Simulator, WorldModel};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::mapping::MapState;
use crate::record::{median, FrontierEvent, RunLayers, RunRecord, StopReason, TrajectorySample};

/// Clusters whose target lies this close to an abandoned or reached target are skipped (m).
pub const VISITED_RADIUS: f64 = 1.0;

/// Cells whose centers are at least one cell away from every wall.
pub fn free_space_mask(world: &WorldModel, g: &GridGeometry) -> Vec<bool> {
    (0..g.len())
        .map(|i| {
            let p = g.cell_to_world(g.cell(i));
            world.extent.contains(p) && world.walls.iter().all(|w| segment_distance(p, w) >= g.resolution)
        })
        .collect()
}

fn segment_distance(p: Point, w: &[f64; 4]) -> f64 {
    let (ex, ey) = (w[2] - w[0], w[3] - w[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - w[0]) * ex + (p[1] - w[1]) * ey) / len2).clamp(0.0, 1.0) };
    (p[0] - w[0] - t * ex).hypot(p[1] - w[1] - t * ey)
}

fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct ActivePlan {
    objective: Objective,
    waypoints: VecDeque<Point>,
}

fn still_present(objective: &Objective, frontiers: &FrontierSet) -> bool {
    frontiers.clusters_of(objective.kind).any(|c| c.cells.contains(&objective.cluster.target))
}

fn unvisited(frontiers: FrontierSet, visited: &[Point], g: &GridGeometry) -> FrontierSet {
    let keep = |c: &FrontierCluster| {
        let t = g.cell_to_world(c.target);
        visited.iter().all(|v| (v[0] - t[0]).hypot(v[1] - t[1]) > VISITED_RADIUS)
    };
    let clusters: Vec<FrontierCluster> = frontiers.clusters.into_iter().filter(keep).collect();
    FrontierSet { clusters, ..frontiers }
}

#[derive(Default)]
struct Trace {
    trajectory: Vec<TrajectorySample>,
    siren: Vec<f64>,
    history: Vec<FrontierEvent>,
}

struct Outcome {
    stop: StopReason,
    ticks: usize,
    map: MapState,
    sim: Simulator,
    world: WorldModel,
}

fn explore(config: &ScenarioConfig, seed: u64, trace: &mut Trace) -> Result<Outcome> {
    config.validate()?;
    let (world, start) = config.world()?;
    let spec = config.prior_spec()?;
    let mut map = MapState::new(&world, config.resolution, &spec, &config.lidar)?;
    let sim_config = SimConfig {
        lidar: config.lidar.clone(),
        noise: config.noise_with_sigma0(),
        heading_var: config.heading_var,
        max_step: config.planner.step_length,
        motion_noise: true,
    };
    let mut sim = Simulator::new(world.clone(), start, sim_config, seed);
    let fparams = map.frontier_params(config.t_h)?;
    let mode = config.pps.objective();
    let g = map.geometry();
    let mut plan: Option<ActivePlan> = None;
    let mut visited: Vec<Point> = Vec::new();
    let mut d_odo = 0.0;
    let mut selections = 0u64;

    for tick in 0..config.max_ticks {
        let sensed = sim.sense();
        sim.update(&sensed.observations)?;
        if !sensed.observations.is_empty() {
            d_odo = 0.0;
        }
        map.integrate(&sim.pose_belief()?, &sensed.scan)?;
        trace.siren.push(map.siren()?.total);
        let (truth, est) = (sim.truth(), sim.kf().robot());
        trace.trajectory.push(TrajectorySample { t: tick, x: truth[0], y: truth[1], phi: truth[2], est_x: est[0], est_y: est[1] });

        if let Some(active) = &plan {
            if active.waypoints.is_empty() {
                visited.push(active.objective.target);
                plan = None;
            } else if tick % config.recheck_every == 0 && !still_present(&active.objective, &map.frontiers(mode, &fparams)?) {
                plan = None;
            }
        }

        if plan.is_none() {
            let frontiers = unvisited(map.frontiers(mode, &fparams)?, &visited, &g);
            let robot = sim.kf().robot();
            let mut pmap = PlanningMap::from_occupancy(&map.occupancy, config.planner.robot_radius);
            pmap.carve(&map.occupancy, robot, config.planner.robot_radius);
            let visibility = BelievedLandmarks::from_filter(sim.kf(), &world, config.lidar.max_range);
            let params = PlannerParams { seed: mix(seed, selections), ..config.planner.clone() };
            selections += 1;
            let start = StartState { position: robot, d_odo, sigma_l: 0.0 };
            let pick = select_objective(&frontiers, start, mode, config.pps.planner(), &pmap, &visibility, &params, Execution::default());
            trace.history.push(FrontierEvent {
                tick,
                kind: mode,
                clusters: frontiers.clusters_of(mode).count(),
                target: pick.as_ref().map(|s| s.objective.target),
                path_cost: pick.as_ref().map(|s| s.path.cost()),
            });
            match pick {
                None => return Ok(Outcome { stop: StopReason::NoObjectives, ticks: tick + 1, map, sim, world }),
                Some(sel) => {
                    let waypoints = sel.path.waypoints.iter().map(|n| n.position).collect();
                    plan = Some(ActivePlan { objective: sel.objective, waypoints });
                }
            }
        }

        let active = plan.as_mut().expect("plan set above");
        let robot = sim.kf().robot();
        while let Some(w) = active.waypoints.front() {
            if (w[0] - robot[0]).hypot(w[1] - robot[1]) < config.resolution {
                active.waypoints.pop_front();
            } else {
                break;
            }
        }
        let Some(&w) = active.waypoints.front() else { continue };
        let u = sim.step([w[0] - robot[0], w[1] - robot[1]]);
        if u == [0.0, 0.0] {
            visited.push(active.objective.target);
            plan = None;
        }
        d_odo += u[0].hypot(u[1]);
    }
    Ok(Outcome { stop: StopReason::IterationCap, ticks: config.max_ticks, map, sim, world })
}

/// One seeded exploration run. Failures are recorded in the returned record.
pub fn run_once(config: &ScenarioConfig, seed: u64) -> RunRecord {
    let clock = Instant::now();
    let mut trace = Trace::default();
    let outcome = explore(config, seed, &mut trace);
    let mut record = RunRecord {
        config: config.clone(),
        seed,
        trajectory: Vec::new(),
        siren_trace: Vec::new(),
        frontier_history: Vec::new(),
        stop_reason: StopReason::Error,
        error: None,
        wall_clock_s: 0.0,
        landmark_sigmas: Vec::new(),
        ticks: trace.trajectory.len(),
        final_siren: trace.siren.last().copied().unwrap_or(0.0),
        explored_cells: 0,
        free_cells: 0,
        unexplored_free_cells: 0,
        median_um: None,
        layers: None,
    };
    match outcome {
        Ok(o) => {
            let um = o.map.uncertainty();
            let explored = o.map.explored();
            let free = free_space_mask(&o.world, &o.map.geometry());
            let explored_um: Vec<f64> = (0..um.values.len()).filter(|&i| explored[i]).map(|i| um.values[i]).collect();
            record.stop_reason = o.stop;
            record.ticks = o.ticks;
            record.landmark_sigmas =
                o.sim.kf().landmark_ids().filter_map(|id| Some((id, o.sim.kf().landmark_sigma(id)?))).collect();
            record.explored_cells = explored.iter().filter(|e| **e).count();
            record.free_cells = free.iter().filter(|f| **f).count();
            record.unexplored_free_cells = (0..free.len()).filter(|&i| free[i] && !explored[i]).count();
            record.median_um = median(&explored_um);
            record.layers = Some(RunLayers { dp: o.map.dp.clone(), um, occupancy: o.map.occupancy.to_layer() });
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record.trajectory = trace.trajectory;
    record.siren_trace = trace.siren;
    record.frontier_history = trace.history;
    record.wall_clock_s = clock.elapsed().as_secs_f64();
    record
}

/// Every seed of `config`, run in parallel worker slots.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    config.world()?;
    let seeds = config.run_seeds();
    Ok(map_slice(&seeds, Execution::default(), |&s| run_once(config, s)))
}

/// Runs a list of configurations as one flat batch.
pub fn run_batch(configs: &[ScenarioConfig]) -> Result<Vec<RunRecord>> {
    let mut jobs = Vec::new();
    for c in configs {
        c.validate()?;
        c.world()?;
        jobs.extend(c.run_seeds().into_iter().map(|s| (c, s)));
    }
    Ok(map_slice(&jobs, Execution::default(), |&(c, s)| run_once(c, s)))
}
