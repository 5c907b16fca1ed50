//! Teleoperation stand-in: drive a fixture's waypoint list and map along the way.

use siren_sim::{Fixture, SimConfig, Simulator};

use crate::config::ScenarioConfig;
use crate::error::{ExperimentError, Result};
use crate::mapping::MapState;

#[derive(Debug, Clone)]
pub struct ScriptedRun {
    pub map: MapState,
    pub simulator: Simulator,
    pub ticks: usize,
}

/// Follows `fixture.waypoints` with ideal motion (the filter still inflates
/// with process noise), sensing and mapping every tick.
pub fn drive_waypoints(fixture: &Fixture, config: &ScenarioConfig, seed: u64) -> Result<ScriptedRun> {
    let start = *fixture
        .waypoints
        .first()
        .ok_or_else(|| ExperimentError::InvalidConfig("fixture has no waypoints".into()))?;
    let sim_config = SimConfig {
        lidar: config.lidar.clone(),
        noise: config.noise_with_sigma0(),
        heading_var: config.heading_var,
        max_step: config.planner.step_length,
        motion_noise: false,
    };
    let spec = config.prior_spec()?;
    let mut map = MapState::new(&fixture.world, config.resolution, &spec, &config.lidar)?;
    let mut sim = Simulator::new(fixture.world.clone(), start, sim_config, seed);
    let mut ticks = 0;
    for &w in &fixture.waypoints[1..] {
        loop {
            let sensed = sim.sense();
            sim.update(&sensed.observations)?;
            map.integrate(&sim.pose_belief()?, &sensed.scan)?;
            let p = sim.kf().robot();
            let d = [w[0] - p[0], w[1] - p[1]];
            if d[0].hypot(d[1]) < 1e-9 {
                break;
            }
            if sim.step(d) == [0.0, 0.0] {
                return Err(ExperimentError::InvalidConfig(format!("waypoint {w:?} is blocked")));
            }
            ticks += 1;
        }
    }
    Ok(ScriptedRun { map, simulator: sim, ticks })
}
