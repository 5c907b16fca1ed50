//! The agent's map: DP log-odds layer, occupancy companion and derived views.

use siren_core::analysis::{
    build_uncertainty_map, explored_mask, extract_classical_frontiers, extract_uncertainty_frontiers, siren,
    FrontierKind, FrontierParams, FrontierSet, SirenMode, SirenParams, SirenReport,
};
use siren_core::belief::{apply_fov, derive_prior, unknown_grid, Beam, FovModel, OccupancyGrid, PriorConstants, PriorSpec};
use siren_core::dispersion::GaussianBelief;
use siren_core::exec::Execution;
use siren_core::grid::{GridGeometry, GridLayer};
use siren_sim::{LidarSpec, WorldModel};

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct MapState {
    pub prior: PriorConstants,
    pub dp: GridLayer,
    pub occupancy: OccupancyGrid,
    pub fov: FovModel,
    pub exec: Execution,
}

impl MapState {
    /// Unknown map covering the world extent.
    pub fn new(world: &WorldModel, resolution: f64, spec: &PriorSpec, lidar: &LidarSpec) -> Result<Self> {
        let geometry = GridGeometry::covering(resolution, world.extent.min, world.extent.max)?;
        let prior = derive_prior(spec)?;
        Ok(Self {
            dp: unknown_grid(geometry, &prior),
            occupancy: OccupancyGrid::new(geometry),
            fov: FovModel { sensor_noise: lidar.noise_covariance(), max_range: lidar.max_range },
            prior,
            exec: Execution::default(),
        })
    }

    pub fn geometry(&self) -> GridGeometry {
        self.dp.geometry
    }

    pub fn integrate(&mut self, pose: &GaussianBelief, scan: &[Beam]) -> Result<()> {
        apply_fov(&mut self.dp, &mut self.occupancy, pose, scan, &self.fov, &self.prior, self.exec)?;
        Ok(())
    }

    pub fn uncertainty(&self) -> GridLayer {
        build_uncertainty_map(&self.dp, &self.prior, self.exec)
    }

    pub fn explored(&self) -> Vec<bool> {
        explored_mask(&self.dp, &self.prior)
    }

    pub fn explored_cells(&self) -> usize {
        self.explored().iter().filter(|e| **e).count()
    }

    pub fn siren(&self) -> Result<SirenReport> {
        let params = SirenParams::from_prior(&self.prior, SirenMode::default());
        Ok(siren(&self.dp, &self.prior, &params, self.exec)?)
    }

    pub fn frontier_params(&self, t_h: f64) -> Result<FrontierParams> {
        Ok(FrontierParams::new(t_h, &self.prior)?)
    }

    pub fn frontiers(&self, kind: FrontierKind, params: &FrontierParams) -> Result<FrontierSet> {
        Ok(match kind {
            FrontierKind::Uncertainty => extract_uncertainty_frontiers(&self.uncertainty(), &self.occupancy, params)?,
            FrontierKind::Classical => extract_classical_frontiers(&self.occupancy, &self.explored(), params)?,
        })
    }
}
