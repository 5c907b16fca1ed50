//! Traversability derived from the occupancy belief.

use siren_core::analysis::clearance_mask;
use siren_core::belief::{CellState, OccupancyGrid};
use siren_core::grid::{GridGeometry, Point};

/// Free cells farther than the robot radius from any occupied cell.
#[derive(Debug, Clone)]
pub struct PlanningMap {
    pub geometry: GridGeometry,
    pub traversable: Vec<bool>,
    free_cells: Vec<usize>,
}

impl PlanningMap {
    pub fn from_mask(geometry: GridGeometry, traversable: Vec<bool>) -> Self {
        let free_cells = (0..traversable.len()).filter(|&i| traversable[i]).collect();
        Self { geometry, traversable, free_cells }
    }

    pub fn from_occupancy(occupancy: &OccupancyGrid, robot_radius: f64) -> Self {
        let blocked = clearance_mask(occupancy, robot_radius);
        let mask = (0..blocked.len()).map(|i| occupancy.state(i) == CellState::Free && !blocked[i]).collect();
        Self::from_mask(*occupancy.geometry(), mask)
    }

    /// Makes the non-occupied cells within `radius` of `p` traversable so a
    /// robot standing close to a wall can still leave.
    pub fn carve(&mut self, occupancy: &OccupancyGrid, p: Point, radius: f64) {
        let g = self.geometry;
        let reach = (radius / g.resolution).ceil() as isize + 1;
        let Ok(center) = g.world_to_cell(p) else { return };
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (col, row) = (center.col as isize + dc, center.row as isize + dr);
                if col < 0 || row < 0 || col as usize >= g.width || row as usize >= g.height {
                    continue;
                }
                let i = row as usize * g.width + col as usize;
                let q = g.cell_to_world(g.cell(i));
                if (q[0] - p[0]).hypot(q[1] - p[1]) <= radius + g.resolution && !occupancy.is_occupied(i) {
                    self.traversable[i] = true;
                }
            }
        }
        self.free_cells = (0..self.traversable.len()).filter(|&i| self.traversable[i]).collect();
    }

    pub fn free_cells(&self) -> &[usize] {
        &self.free_cells
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.geometry.world_to_cell(p).map(|c| self.traversable[self.geometry.index(c)]).unwrap_or(false)
    }

    pub fn segment_free(&self, a: Point, b: Point) -> bool {
        match self.geometry.traverse(a, b) {
            Ok(cells) => cells.iter().all(|&c| self.traversable[self.geometry.index(c)]),
            Err(_) => false,
        }
    }
}
