//! Fixed scenario for filter consistency checks.

use crate::sim::{SimConfig, Simulator};
use crate::world::{Extent, Landmark, WorldModel};

/// Open 20 x 20 m area with two landmarks and no walls.
pub fn two_landmark_world() -> WorldModel {
    WorldModel {
        walls: Vec::new(),
        landmarks: vec![Landmark { id: 0, x: 1.0, y: 2.5 }, Landmark { id: 1, x: 4.0, y: -2.0 }],
        extent: Extent { min: [-10.0, -10.0], max: [10.0, 10.0] },
    }
}

/// Runs a back-and-forth drive past both landmarks and returns the robot
/// NEES after every tick.
pub fn two_landmark_nees(seed: u64, ticks: usize) -> Vec<f64> {
    let mut sim = Simulator::new(two_landmark_world(), [0.0, 0.0], SimConfig::default(), seed);
    let mut out = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let dir = if (k / 20) % 2 == 0 { 1.0 } else { -1.0 };
        let sensed = sim.sense();
        sim.update(&sensed.observations).expect("distinct ids");
        let truth = sim.truth();
        out.push(sim.kf().robot_nees([truth[0], truth[1]]).expect("positive definite"));
        sim.step([0.25 * dir, 0.0]);
    }
    out
}
