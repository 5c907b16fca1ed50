use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use siren_core::grid::Point;
use siren_core::{Error, Result};

use crate::world::WorldModel;

/// A world plus the named start positions and scripted paths that go with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub world: WorldModel,
    pub starts: BTreeMap<String, Point>,
    pub removable_landmark: Option<u32>,
    pub waypoints: Vec<Point>,
}

const WAREHOUSE: &str = include_str!("../fixtures/warehouse.json");
const CORRIDOR: &str = include_str!("../fixtures/corridor.json");

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.world.validate()?;
        Ok(f)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        match name {
            "warehouse" => Self::from_json(WAREHOUSE),
            "corridor" => Self::from_json(CORRIDOR),
            other => Err(Error::InvalidParameter(format!("unknown fixture '{other}'"))),
        }
    }

    pub fn start(&self, name: &str) -> Result<Point> {
        self.starts.get(name).copied().ok_or_else(|| Error::InvalidParameter(format!("fixture has no start '{name}'")))
    }

    /// The world with the removable landmark taken out.
    pub fn incomplete_world(&self) -> WorldModel {
        match self.removable_landmark {
            Some(id) => self.world.without_landmark(id),
            None => self.world.clone(),
        }
    }
}
