//! World-anchored 2D grids.
//!
//! Cells are stored row-major: cell `(col, row)` lives at `row * width + col`,
//! with row 0 at the bottom (smallest y) of the world extent. A point on the
//! shared edge of two cells belongs to the cell with the larger index.

mod io;

pub use io::{export_pgm, load_layer, read_csv_layer, save_layer, write_atomic, LayerSidecar};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A world point in meters.
pub type Point = [f64; 2];

/// Column / row address of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Placement and resolution of a grid in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    /// Cell side length in meters.
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0).
    pub origin: Point,
    pub width: usize,
    pub height: usize,
}

impl GridGeometry {
    pub fn new(resolution: f64, origin: Point, width: usize, height: usize) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidParameter(format!("resolution {resolution} must be positive")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("grid must have at least one cell".into()));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("origin must be finite".into()));
        }
        Ok(Self { resolution, origin, width, height })
    }

    /// Smallest grid at `resolution` covering the box `[min, max]`.
    pub fn covering(resolution: f64, min: Point, max: Point) -> Result<Self> {
        let w = ((max[0] - min[0]) / resolution).ceil().max(1.0) as usize;
        let h = ((max[1] - min[1]) / resolution).ceil().max(1.0) as usize;
        Self::new(resolution, min, w, h)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area of one cell in square meters.
    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    /// Upper-right corner of the world extent.
    pub fn max_corner(&self) -> Point {
        [
            self.origin[0] + self.width as f64 * self.resolution,
            self.origin[1] + self.height as f64 * self.resolution,
        ]
    }

    pub fn contains_point(&self, p: Point) -> bool {
        let max = self.max_corner();
        p[0] >= self.origin[0] && p[1] >= self.origin[1] && p[0] < max[0] && p[1] < max[1]
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    pub fn world_to_cell(&self, p: Point) -> Result<CellIndex> {
        let fx = ((p[0] - self.origin[0]) / self.resolution).floor();
        let fy = ((p[1] - self.origin[1]) / self.resolution).floor();
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64) {
            return Err(Error::OutOfBounds { x: p[0], y: p[1] });
        }
        Ok(CellIndex::new(fx as usize, fy as usize))
    }

    /// Center of a cell in world coordinates.
    pub fn cell_to_world(&self, cell: CellIndex) -> Point {
        [
            self.origin[0] + (cell.col as f64 + 0.5) * self.resolution,
            self.origin[1] + (cell.row as f64 + 0.5) * self.resolution,
        ]
    }

    #[inline]
    pub fn index(&self, cell: CellIndex) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn cell(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    /// In-bounds 8-neighbours of a cell.
    pub fn neighbors8(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        let (c, r) = (cell.col as isize, cell.row as isize);
        (-1isize..=1)
            .flat_map(move |dr| (-1isize..=1).map(move |dc| (dc, dr)))
            .filter(|&(dc, dr)| dc != 0 || dr != 0)
            .filter_map(move |(dc, dr)| {
                let (nc, nr) = (c + dc, r + dr);
                (nc >= 0 && nr >= 0 && (nc as usize) < self.width && (nr as usize) < self.height)
                    .then(|| CellIndex::new(nc as usize, nr as usize))
            })
    }

    /// Cells crossed by the segment `from -> to`, in traversal order, clipped
    /// to the grid. `from` must lie inside the grid.
    pub fn traverse(&self, from: Point, to: Point) -> Result<Vec<CellIndex>> {
        let start = self.world_to_cell(from)?;
        let c = self.resolution;
        let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
        let end = self.world_to_cell(to).ok();
        let mut col = start.col as isize;
        let mut row = start.row as isize;
        let step_x: isize = if dx > 0.0 { 1 } else { -1 };
        let step_y: isize = if dy > 0.0 { 1 } else { -1 };
        // Parametric distance (in units of the segment) to the next vertical / horizontal edge.
        let next_edge = |pos: f64, origin: f64, idx: isize, step: isize| -> f64 {
            let edge = origin + (idx + if step > 0 { 1 } else { 0 }) as f64 * c;
            edge - pos
        };
        let mut t_max_x = if dx != 0.0 {
            next_edge(from[0], self.origin[0], col, step_x) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy != 0.0 {
            next_edge(from[1], self.origin[1], row, step_y) / dy
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dx != 0.0 { c / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { c / dy.abs() } else { f64::INFINITY };

        let mut cells = vec![start];
        let (w, h) = (self.width as isize, self.height as isize);
        loop {
            let current = CellIndex::new(col as usize, row as usize);
            if Some(current) == end {
                break;
            }
            if t_max_x.min(t_max_y) > 1.0 {
                break;
            }
            if t_max_x < t_max_y {
                col += step_x;
                t_max_x += t_delta_x;
            } else {
                row += step_y;
                t_max_y += t_delta_y;
            }
            if col < 0 || row < 0 || col >= w || row >= h {
                break;
            }
            cells.push(CellIndex::new(col as usize, row as usize));
        }
        Ok(cells)
    }
}

/// What the values of a layer mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantic {
    LogOdds,
    DispersionProbability,
    Uncertainty,
    Occupancy,
}

/// Dense scalar field over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayer {
    pub geometry: GridGeometry,
    pub semantic: Semantic,
    pub values: Vec<f64>,
}

impl GridLayer {
    pub fn filled(geometry: GridGeometry, semantic: Semantic, value: f64) -> Self {
        Self { geometry, semantic, values: vec![value; geometry.len()] }
    }

    pub fn from_values(geometry: GridGeometry, semantic: Semantic, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::MalformedFile(format!(
                "{} values for a {}x{} grid",
                values.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(Self { geometry, semantic, values })
    }

    #[inline]
    pub fn get(&self, cell: CellIndex) -> f64 {
        self.values[self.geometry.index(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: CellIndex, value: f64) {
        let i = self.geometry.index(cell);
        self.values[i] = value;
    }

    pub fn same_geometry(&self, other: &GridGeometry) -> Result<()> {
        if &self.geometry == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }
}

/// Per-cell gradient `(d/dx, d/dy)` in layer units per meter.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub geometry: GridGeometry,
    pub values: Vec<[f64; 2]>,
}

impl GradientField {
    pub fn magnitude(&self, index: usize) -> f64 {
        let [gx, gy] = self.values[index];
        gx.hypot(gy)
    }
}

/// Central differences over `2c` inside the grid, one-sided differences over
/// `c` on the border rows and columns.
pub fn central_gradient(layer: &GridLayer) -> Result<GradientField> {
    let g = layer.geometry;
    if g.width < 3 || g.height < 3 {
        return Err(Error::DegenerateGrid { width: g.width, height: g.height });
    }
    let c = g.resolution;
    let v = &layer.values;
    let at = |col: usize, row: usize| v[row * g.width + col];
    let diff = |lo: f64, hi: f64, span: f64| (hi - lo) / span;
    let mut out = Vec::with_capacity(g.len());
    for row in 0..g.height {
        for col in 0..g.width {
            let gx = if col == 0 {
                diff(at(0, row), at(1, row), c)
            } else if col + 1 == g.width {
                diff(at(col - 1, row), at(col, row), c)
            } else {
                diff(at(col - 1, row), at(col + 1, row), 2.0 * c)
            };
            let gy = if row == 0 {
                diff(at(col, 0), at(col, 1), c)
            } else if row + 1 == g.height {
                diff(at(col, row - 1), at(col, row), c)
            } else {
                diff(at(col, row - 1), at(col, row + 1), 2.0 * c)
            };
            out.push([gx, gy]);
        }
    }
    Ok(GradientField { geometry: g, values: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(c: f64, origin: Point, w: usize, h: usize) -> GridGeometry {
        GridGeometry::new(c, origin, w, h).unwrap()
    }

    #[test]
    fn world_to_cell_examples() {
        let g = geom(0.1, [0.0, 0.0], 10, 10);
        assert_eq!(g.world_to_cell([0.05, 0.05]).unwrap(), CellIndex::new(0, 0));
        assert_eq!(g.world_to_cell([0.10, 0.00]).unwrap(), CellIndex::new(1, 0));
        let g = geom(0.5, [-1.0, -1.0], 8, 8);
        assert_eq!(g.world_to_cell([0.26, 0.9]).unwrap(), CellIndex::new(2, 3));
    }

    #[test]
    fn out_of_bounds_carries_point() {
        let g = geom(0.1, [0.0, 0.0], 10, 10);
        match g.world_to_cell([1.0, 0.5]) {
            Err(Error::OutOfBounds { x, y }) => assert_eq!((x, y), (1.0, 0.5)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(g.world_to_cell([-1e-12, 0.5]).is_err());
    }

    #[test]
    fn round_trip_exhaustive_small_grids() {
        for &(c, o) in &[(0.1, [0.0, 0.0]), (0.37, [-3.3, 1.7]), (1.0, [5.0, -5.0])] {
            let g = geom(c, o, 13, 7);
            for row in 0..g.height {
                for col in 0..g.width {
                    let cell = CellIndex::new(col, row);
                    assert_eq!(g.world_to_cell(g.cell_to_world(cell)).unwrap(), cell);
                    assert_eq!(g.cell(g.index(cell)), cell);
                }
            }
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = geom(0.1, [0.0, 0.0], 6, 5);
        let layer = GridLayer::filled(g, Semantic::Uncertainty, 0.3);
        let grad = central_gradient(&layer).unwrap();
        assert!(grad.values.iter().all(|v| v == &[0.0, 0.0]));
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = geom(0.25, [-1.0, 2.0], 9, 7);
        for &(a, b) in &[(1.0, 0.0), (0.3, -2.5), (-7.0, 11.0)] {
            let values = (0..g.len())
                .map(|i| {
                    let p = g.cell_to_world(g.cell(i));
                    a * p[0] + b * p[1]
                })
                .collect();
            let layer = GridLayer::from_values(g, Semantic::Uncertainty, values).unwrap();
            let grad = central_gradient(&layer).unwrap();
            for [gx, gy] in grad.values {
                assert!((gx - a).abs() <= 1e-12 * a.abs().max(1.0) * 10.0, "{gx} vs {a}");
                assert!((gy - b).abs() <= 1e-12 * b.abs().max(1.0) * 10.0, "{gy} vs {b}");
            }
        }
    }

    #[test]
    fn gradient_of_step_is_jump_over_two_cells() {
        let g = geom(0.1, [0.0, 0.0], 5, 5);
        let values = (0..g.len()).map(|i| if g.cell(i).col >= 3 { 0.3 } else { 0.0 }).collect();
        let layer = GridLayer::from_values(g, Semantic::Uncertainty, values).unwrap();
        let grad = central_gradient(&layer).unwrap();
        for row in 1..4 {
            for col in [2, 3] {
                let m = grad.magnitude(g.index(CellIndex::new(col, row)));
                assert!((m - 1.5).abs() < 1e-12, "{m}");
            }
            assert_eq!(grad.magnitude(g.index(CellIndex::new(1, row))), 0.0);
        }
    }

    #[test]
    fn gradient_rejects_small_grids() {
        let g = geom(0.1, [0.0, 0.0], 2, 5);
        let layer = GridLayer::filled(g, Semantic::Uncertainty, 0.0);
        assert!(matches!(central_gradient(&layer), Err(Error::DegenerateGrid { .. })));
    }

    #[test]
    fn traverse_axis_aligned() {
        let g = geom(0.1, [0.0, 0.0], 20, 20);
        let cells = g.traverse([0.05, 0.05], [0.95, 0.05]).unwrap();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells.last().unwrap(), &CellIndex::new(9, 0));
        let cells = g.traverse([1.05, 1.05], [1.05, 0.55]).unwrap();
        assert_eq!(cells.first().unwrap(), &CellIndex::new(10, 10));
        assert_eq!(cells.last().unwrap(), &CellIndex::new(10, 5));
    }

    #[test]
    fn traverse_clips_at_border() {
        let g = geom(0.1, [0.0, 0.0], 10, 10);
        let cells = g.traverse([0.55, 0.55], [5.0, 0.55]).unwrap();
        assert_eq!(cells.len(), 5);
        assert!(cells.iter().all(|c| g.contains(*c)));
    }
}
