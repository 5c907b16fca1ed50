use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use siren_core::belief::Beam;
use siren_core::dispersion::PolarMeasurement;

use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSpec {
    pub max_range: f64,
    pub angular_resolution: f64,
    pub coverage: f64,
    pub range_noise_std: f64,
    pub bearing_noise_std: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            max_range: 5.0,
            angular_resolution: 0.5f64.to_radians(),
            coverage: std::f64::consts::TAU,
            range_noise_std: 0.02,
            bearing_noise_std: 0.1f64.to_radians(),
        }
    }
}

impl LidarSpec {
    pub fn beam_count(&self) -> usize {
        ((self.coverage / self.angular_resolution).round() as usize).max(1)
    }

    /// Beam bearings in the sensor frame, starting at `-coverage / 2`.
    pub fn bearings(&self) -> impl Iterator<Item = f64> + '_ {
        let start = if self.coverage >= std::f64::consts::TAU { 0.0 } else { -0.5 * self.coverage };
        (0..self.beam_count()).map(move |k| start + k as f64 * self.angular_resolution)
    }

    /// `(range, bearing)` noise covariance for the map update.
    pub fn noise_covariance(&self) -> [[f64; 2]; 2] {
        [[self.range_noise_std.powi(2), 0.0], [0.0, self.bearing_noise_std.powi(2)]]
    }
}

/// Simulated scan from the true pose `(x, y, phi)`.
pub fn raycast_scan<R: Rng>(world: &WorldModel, pose: [f64; 3], spec: &LidarSpec, rng: &mut R) -> Vec<Beam> {
    let range_noise = Normal::new(0.0, spec.range_noise_std.max(0.0)).expect("finite std");
    let bearing_noise = Normal::new(0.0, spec.bearing_noise_std.max(0.0)).expect("finite std");
    spec.bearings()
        .map(|bearing| {
            let hit = world.cast([pose[0], pose[1]], pose[2] + bearing, spec.max_range);
            let (dr, db) = (range_noise.sample(rng), bearing_noise.sample(rng));
            let (range, hit) = match hit {
                Some(r) => ((r + dr).clamp(0.0, spec.max_range), true),
                None => (spec.max_range, false),
            };
            let measurement = PolarMeasurement::new(range, bearing + db).expect("finite reading");
            Beam { measurement, hit }
        })
        .collect()
}
