use serde::{Deserialize, Serialize};
use siren_core::grid::Point;
use siren_core::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: Point,
    pub max: Point,
}

impl Extent {
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

impl Landmark {
    pub fn position(&self) -> Point {
        [self.x, self.y]
    }
}

/// Walls as line segments `[x1, y1, x2, y2]` plus point landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub walls: Vec<[f64; 4]>,
    pub landmarks: Vec<Landmark>,
    pub extent: Extent,
}

/// Ray parameter `t` at which `origin + t * dir` meets the segment, if any.
pub fn ray_segment(origin: Point, dir: Point, seg: &[f64; 4]) -> Option<f64> {
    let (ex, ey) = (seg[2] - seg[0], seg[3] - seg[1]);
    let denom = dir[0] * ey - dir[1] * ex;
    if denom.abs() < 1e-15 {
        return None;
    }
    let (wx, wy) = (seg[0] - origin[0], seg[1] - origin[1]);
    let t = (wx * ey - wy * ex) / denom;
    let u = (wx * dir[1] - wy * dir[0]) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}

impl WorldModel {
    pub fn validate(&self) -> Result<()> {
        let finite = self.walls.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("wall endpoints must be finite".into()));
        }
        if let Some(l) = self.landmarks.iter().find(|l| !self.extent.contains(l.position())) {
            return Err(Error::InvalidParameter(format!("landmark {} lies outside the extent", l.id)));
        }
        let mut ids: Vec<u32> = self.landmarks.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate landmark id".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    /// Distance to the nearest wall along `angle`, if within `max_range`.
    pub fn cast(&self, origin: Point, angle: f64, max_range: f64) -> Option<f64> {
        let dir = [angle.cos(), angle.sin()];
        self.walls
            .iter()
            .filter_map(|s| ray_segment(origin, dir, s))
            .filter(|t| *t <= max_range)
            .min_by(f64::total_cmp)
    }

    /// True when the open segment `a -> b` crosses no wall.
    pub fn line_of_sight(&self, a: Point, b: Point) -> bool {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        if len == 0.0 {
            return true;
        }
        let dir = [dx / len, dy / len];
        !self.walls.iter().filter_map(|s| ray_segment(a, dir, s)).any(|t| t < len - 1e-9)
    }

    /// Like [`WorldModel::line_of_sight`] but keeps `margin` meters from walls
    /// along the way, checked by sampling parallel offsets.
    pub fn clear_path(&self, a: Point, b: Point, margin: f64) -> bool {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        if !self.line_of_sight(a, b) {
            return false;
        }
        if len == 0.0 || margin == 0.0 {
            return true;
        }
        let (nx, ny) = (-dy / len * margin, dx / len * margin);
        self.line_of_sight([a[0] + nx, a[1] + ny], [b[0] + nx, b[1] + ny])
            && self.line_of_sight([a[0] - nx, a[1] - ny], [b[0] - nx, b[1] - ny])
    }

    pub fn landmark(&self, id: u32) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn without_landmark(&self, id: u32) -> Self {
        let mut w = self.clone();
        w.landmarks.retain(|l| l.id != id);
        w
    }

    /// Landmarks within `range` of `p` with a clear line of sight, ascending id.
    pub fn visible_landmarks(&self, p: Point, range: f64) -> Vec<Landmark> {
        let mut v: Vec<Landmark> = self
            .landmarks
            .iter()
            .filter(|l| (l.x - p[0]).hypot(l.y - p[1]) <= range && self.line_of_sight(p, l.position()))
            .copied()
            .collect();
        v.sort_by_key(|l| l.id);
        v
    }
}
