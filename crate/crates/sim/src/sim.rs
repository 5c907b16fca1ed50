use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use siren_core::belief::Beam;
use siren_core::dispersion::GaussianBelief;
use siren_core::grid::Point;
use siren_core::Result;

use crate::kf::{kf_predict, kf_update, mat2, pose_belief, KfState, NoiseParams, Observation};
use crate::lidar::{raycast_scan, LidarSpec};
use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub lidar: LidarSpec,
    pub noise: NoiseParams,
    /// Variance of the externally supplied heading (rad^2).
    pub heading_var: f64,
    /// Longest displacement executed in one tick (m).
    pub max_step: f64,
    /// When false the true robot follows commands exactly while the filter
    /// still accounts for process noise.
    pub motion_noise: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lidar: LidarSpec::default(),
            noise: NoiseParams::default(),
            heading_var: 1e-4,
            max_step: 0.25,
            motion_noise: true,
        }
    }
}

/// What the robot perceives in one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensed {
    pub scan: Vec<Beam>,
    pub observations: Vec<Observation>,
}

/// Stepped simulation of a holonomic robot with a known heading.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub world: WorldModel,
    pub config: SimConfig,
    rng: ChaCha8Rng,
    truth: [f64; 3],
    kf: KfState,
    tick: u64,
}

const WALL_MARGIN: f64 = 0.05;
const MOTION_RETRIES: usize = 10;

impl Simulator {
    /// Starts at `start` with the filter mean there; the true position is
    /// drawn from the initial covariance when motion noise is on.
    pub fn new(world: WorldModel, start: Point, config: SimConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kf = KfState::new(start, &config.noise);
        let mut truth = [start[0], start[1], 0.0];
        if config.motion_noise {
            let chol = mat2(&config.noise.p0).cholesky();
            for _ in 0..MOTION_RETRIES {
                let Some(l) = chol.as_ref().map(|c| c.l()) else { break };
                let z: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
                let d = [l[(0, 0)] * z[0], l[(1, 0)] * z[0] + l[(1, 1)] * z[1]];
                let cand = [start[0] + d[0], start[1] + d[1]];
                if world.clear_path(start, cand, WALL_MARGIN) {
                    truth = [cand[0], cand[1], 0.0];
                    break;
                }
            }
        }
        Self { world, config, rng, truth, kf, tick: 0 }
    }

    pub fn truth(&self) -> [f64; 3] {
        self.truth
    }

    pub fn kf(&self) -> &KfState {
        &self.kf
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn heading(&self) -> f64 {
        self.truth[2]
    }

    pub fn pose_belief(&self) -> Result<GaussianBelief> {
        pose_belief(&self.kf, self.truth[2], self.config.heading_var)
    }

    /// LiDAR scan and landmark observations from the true pose.
    pub fn sense(&mut self) -> Sensed {
        let scan = raycast_scan(&self.world, self.truth, &self.config.lidar, &mut self.rng);
        let p = [self.truth[0], self.truth[1]];
        let r = mat2(&self.config.noise.r).cholesky().map(|c| c.l());
        let observations = self
            .world
            .visible_landmarks(p, self.config.lidar.max_range)
            .into_iter()
            .map(|l| {
                let z: [f64; 2] = [StandardNormal.sample(&mut self.rng), StandardNormal.sample(&mut self.rng)];
                let v = match &r {
                    Some(l) => [l[(0, 0)] * z[0], l[(1, 0)] * z[0] + l[(1, 1)] * z[1]],
                    None => [0.0, 0.0],
                };
                Observation { id: l.id, z: [l.x - p[0] + v[0], l.y - p[1] + v[1]] }
            })
            .collect();
        Sensed { scan, observations }
    }

    /// Fuses landmark observations into the filter.
    pub fn update(&mut self, observations: &[Observation]) -> Result<()> {
        self.kf = kf_update(&self.kf, observations, &self.config.noise)?;
        Ok(())
    }

    /// Executes a displacement command clipped to `max_step`. Returns the
    /// odometry actually applied (zero when the move would cross a wall).
    pub fn step(&mut self, command: [f64; 2]) -> [f64; 2] {
        let len = command[0].hypot(command[1]);
        let scale = if len > self.config.max_step { self.config.max_step / len } else { 1.0 };
        let mut u = [command[0] * scale, command[1] * scale];
        let from = [self.truth[0], self.truth[1]];
        if !self.world.clear_path(from, [from[0] + u[0], from[1] + u[1]], WALL_MARGIN) {
            u = [0.0, 0.0];
        }
        let mut w = [0.0, 0.0];
        if self.config.motion_noise {
            let l = mat2(&self.config.noise.q).cholesky().map(|c| c.l());
            let mut accepted = false;
            for _ in 0..MOTION_RETRIES {
                let z: [f64; 2] = [StandardNormal.sample(&mut self.rng), StandardNormal.sample(&mut self.rng)];
                let cand = match &l {
                    Some(l) => [l[(0, 0)] * z[0], l[(1, 0)] * z[0] + l[(1, 1)] * z[1]],
                    None => [0.0, 0.0],
                };
                let to = [from[0] + u[0] + cand[0], from[1] + u[1] + cand[1]];
                if self.world.clear_path(from, to, WALL_MARGIN) {
                    w = cand;
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                w = [0.0, 0.0];
            }
        }
        self.truth[0] += u[0] + w[0];
        self.truth[1] += u[1] + w[1];
        if u[0] != 0.0 || u[1] != 0.0 {
            self.truth[2] = u[1].atan2(u[0]);
        }
        self.kf = kf_predict(&self.kf, u, &self.config.noise);
        self.tick += 1;
        u
    }

    /// Draws a value from the simulator's stream; used for seeding planners.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.random()
    }
}
