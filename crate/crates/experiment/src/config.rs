//! Scenario configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use siren_core::analysis::FrontierKind;
use siren_core::belief::PriorSpec;
use siren_planning::{PlannerKind, PlannerParams};
use siren_sim::{Fixture, LidarSpec, NoiseParams, WorldModel};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldFixture {
    Corridor,
    Warehouse,
}

impl WorldFixture {
    pub fn name(self) -> &'static str {
        match self {
            Self::Corridor => "corridor",
            Self::Warehouse => "warehouse",
        }
    }

    pub fn load(self) -> Result<Fixture> {
        Fixture::bundled(self.name()).map_err(|_| ExperimentError::MissingFixture(self.name().into()))
    }
}

impl std::str::FromStr for WorldFixture {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corridor" => Ok(Self::Corridor),
            "warehouse" => Ok(Self::Warehouse),
            other => Err(ExperimentError::MissingFixture(other.into())),
        }
    }
}

/// Landmark completeness and start position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layout {
    L1,
    L2,
    L3,
    L4,
}

impl Layout {
    pub const ALL: [Layout; 4] = [Layout::L1, Layout::L2, Layout::L3, Layout::L4];

    pub fn complete(self) -> bool {
        matches!(self, Self::L3 | Self::L4)
    }

    pub fn start_name(self) -> &'static str {
        match self {
            Self::L1 | Self::L4 => "P2",
            Self::L2 | Self::L3 => "P1",
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Layout {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Self::L1),
            "L2" => Ok(Self::L2),
            "L3" => Ok(Self::L3),
            "L4" => Ok(Self::L4),
            other => Err(ExperimentError::InvalidConfig(format!("unknown layout '{other}'"))),
        }
    }
}

/// Path planning system: objective kind, planner and reference deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pps {
    Pps1,
    Pps2,
    Pps3,
    Pps4,
}

impl Pps {
    pub const ALL: [Pps; 4] = [Pps::Pps1, Pps::Pps2, Pps::Pps3, Pps::Pps4];

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::Pps1),
            2 => Ok(Self::Pps2),
            3 => Ok(Self::Pps3),
            4 => Ok(Self::Pps4),
            _ => Err(ExperimentError::InvalidConfig(format!("pps must be 1..4, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn objective(self) -> FrontierKind {
        match self {
            Self::Pps1 | Self::Pps2 => FrontierKind::Classical,
            Self::Pps3 | Self::Pps4 => FrontierKind::Uncertainty,
        }
    }

    pub fn planner(self) -> PlannerKind {
        match self {
            Self::Pps1 => PlannerKind::GreedyRrt,
            _ => PlannerKind::UncertaintyRrtStar,
        }
    }

    /// Reference deviation used for the map prior and SiREn.
    pub fn default_sigma_max(self) -> f64 {
        match self {
            Self::Pps3 => 0.6,
            _ => 1.0,
        }
    }
}

impl std::fmt::Display for Pps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PPS{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub world_fixture: WorldFixture,
    pub layout: Layout,
    pub pps: Pps,
    pub sigma_max: f64,
    /// Accept a `sigma_max` other than the one the PPS prescribes.
    pub override_sigma_max: bool,
    pub t_h: f64,
    pub sigma0: f64,
    pub s: f64,
    pub kappa: f64,
    pub resolution: f64,
    pub seeds: Vec<u64>,
    pub repeats: usize,
    pub max_ticks: usize,
    /// Ticks between checks that the current objective still exists.
    pub recheck_every: usize,
    pub lidar: LidarSpec,
    pub noise: NoiseParams,
    pub heading_var: f64,
    pub planner: PlannerParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            world_fixture: WorldFixture::Warehouse,
            layout: Layout::L3,
            pps: Pps::Pps1,
            sigma_max: 1.0,
            override_sigma_max: false,
            t_h: 0.2,
            sigma0: 0.1,
            s: 0.1,
            kappa: 0.5,
            resolution: 0.1,
            seeds: Vec::new(),
            repeats: 5,
            max_ticks: 5000,
            recheck_every: 4,
            lidar: LidarSpec::default(),
            noise: NoiseParams::default(),
            heading_var: 1e-4,
            planner: PlannerParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn new(world_fixture: WorldFixture, layout: Layout, pps: Pps) -> Self {
        Self { world_fixture, layout, pps, sigma_max: pps.default_sigma_max(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.into()));
        if !self.override_sigma_max && matches!(self.pps, Pps::Pps3 | Pps::Pps4) && self.sigma_max != self.pps.default_sigma_max() {
            return bad("PPS3 requires sigma_max = 0.6 and PPS4 sigma_max = 1.0 unless override_sigma_max is set");
        }
        let positive = [self.sigma_max, self.t_h, self.sigma0, self.s, self.resolution, self.heading_var];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("sigma_max, t_h, sigma0, s, resolution and heading_var must be positive");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad("kappa must lie in (0, 1]");
        }
        if self.repeats == 0 && self.seeds.is_empty() {
            return bad("repeats must be at least 1");
        }
        if self.max_ticks == 0 || self.recheck_every == 0 {
            return bad("max_ticks and recheck_every must be positive");
        }
        self.planner.validate()?;
        Ok(())
    }

    /// Explicit seeds, or `0..repeats`.
    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.repeats as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    /// The world for this layout and the named start.
    pub fn world(&self) -> Result<(WorldModel, [f64; 2])> {
        let fixture = self.world_fixture.load()?;
        match self.world_fixture {
            WorldFixture::Warehouse => {
                let world = if self.layout.complete() { fixture.world.clone() } else { fixture.incomplete_world() };
                Ok((world, fixture.start(self.layout.start_name())?))
            }
            WorldFixture::Corridor => Ok((fixture.world.clone(), fixture.start("Pi")?)),
        }
    }

    /// Initial filter covariance from the initial deviation.
    pub fn prior_spec(&self) -> Result<PriorSpec> {
        Ok(PriorSpec::planar(self.sigma_max, self.s, self.kappa)?)
    }

    pub fn noise_with_sigma0(&self) -> NoiseParams {
        let v = self.sigma0 * self.sigma0;
        NoiseParams { p0: [[v, 0.0], [0.0, v]], ..self.noise.clone() }
    }
}
