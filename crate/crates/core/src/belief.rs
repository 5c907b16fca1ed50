//! Log-odds bookkeeping for dispersion-probability grids.
//!
//! A DP grid stores `l = ln(p / (1 - p))` per cell. Unexplored cells sit at
//! exactly `l_beta`, the log-odds of the prior DP `beta`. New evidence is
//! blended in at rate `kappa`, and a gate keeps an explored cell from being
//! degraded by a worse observation.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    polar_jacobians, rectangle_probability, rectangle_probability_2d, GaussianBelief, PolarMeasurement,
    RectangleSpec,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::{CellIndex, GridGeometry, GridLayer, Point, Semantic};

/// `ln(p / (1 - p))` for `p` in `(0, 1)`.
pub fn prob_to_logodds(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError { what: "probability", value: p });
    }
    Ok(p.ln() - (-p).ln_1p())
}

/// Inverse of [`prob_to_logodds`].
pub fn logodds_to_prob(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::DomainError { what: "log-odds", value: *v }),
        None => Ok(()),
    }
}

/// `l_prev + kappa (l_new - l_prev)`.
pub fn blend_update(l_prev: f64, l_new: f64, kappa: f64) -> Result<f64> {
    check_finite(&[l_prev, l_new, kappa])?;
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::DomainError { what: "kappa", value: kappa });
    }
    Ok(l_prev + kappa * (l_new - l_prev))
}

/// Blend unless the cell is explored and already better than the new data.
pub fn gated_update(l_prev: f64, l_new: f64, kappa: f64, l_beta: f64) -> Result<f64> {
    check_finite(&[l_beta])?;
    if l_prev > l_beta.max(l_new) {
        check_finite(&[l_new, kappa])?;
        return Ok(l_prev);
    }
    blend_update(l_prev, l_new, kappa)
}

/// Design inputs for the prior DP of an unexplored cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub sigma_max: Vec<f64>,
    pub sides: RectangleSpec,
    pub kappa: f64,
}

impl PriorSpec {
    pub fn new(sigma_max: Vec<f64>, sides: Vec<f64>, kappa: f64) -> Result<Self> {
        let sides = RectangleSpec::new(sides)?;
        if sigma_max.len() != sides.dimension() {
            return Err(Error::InvalidParameter(format!(
                "{} maximum deviations for {} sides",
                sigma_max.len(),
                sides.dimension()
            )));
        }
        if sigma_max.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma_max must be positive: {sigma_max:?}")));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::DomainError { what: "kappa", value: kappa });
        }
        let limit = 4.0 / 3f64.sqrt();
        let axes: Vec<usize> = sides
            .sides()
            .iter()
            .zip(&sigma_max)
            .enumerate()
            .filter(|(_, (s, m))| **s > limit * **m)
            .map(|(i, _)| i)
            .collect();
        if !axes.is_empty() {
            return Err(Error::BoundDomainViolation { axes });
        }
        Ok(Self { sigma_max, sides, kappa })
    }

    /// Isotropic planar spec: `sigma_max` on both axes, square cells of side `s`.
    pub fn planar(sigma_max: f64, s: f64, kappa: f64) -> Result<Self> {
        Self::new(vec![sigma_max; 2], vec![s; 2], kappa)
    }
}

/// Constants derived from a [`PriorSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConstants {
    pub dimension: usize,
    pub sides: Vec<f64>,
    pub kappa: f64,
    pub beta: f64,
    pub ell_beta: f64,
    pub a: f64,
    pub u_beta: f64,
    pub sigma_tilde_max: f64,
}

impl PriorConstants {
    /// `a / p^(1/N)`, the uncertainty implied by a dispersion probability.
    pub fn uncertainty_of(&self, p: f64) -> f64 {
        self.a / p.powf(1.0 / self.dimension as f64)
    }
}

pub fn derive_prior(spec: &PriorSpec) -> Result<PriorConstants> {
    let n = spec.sigma_max.len();
    let variances: Vec<f64> = spec.sigma_max.iter().map(|s| s * s).collect();
    let reference = GaussianBelief::from_diagonal(&vec![0.0; n], &variances)?;
    let beta = rectangle_probability(&reference, &spec.sides)?.probability;
    let a = spec.sides.bound_constant();
    let sigma_tilde_max = (spec.sigma_max.iter().map(|s| s.ln()).sum::<f64>() / n as f64).exp();
    Ok(PriorConstants {
        dimension: n,
        sides: spec.sides.sides().to_vec(),
        kappa: spec.kappa,
        beta,
        ell_beta: prob_to_logodds(beta)?,
        a,
        u_beta: a / beta.powf(1.0 / n as f64),
        sigma_tilde_max,
    })
}

/// A fresh DP grid with every cell at `l_beta`.
pub fn unknown_grid(geometry: GridGeometry, prior: &PriorConstants) -> GridLayer {
    GridLayer::filled(geometry, Semantic::LogOdds, prior.ell_beta)
}

/// Observation state of a cell in the occupancy companion layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Hit and pass-through counts per cell, accumulated over beams.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    hits: Vec<u32>,
    passes: Vec<u32>,
    occupied_fraction: f64,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry) -> Self {
        let n = geometry.len();
        Self { geometry, hits: vec![0; n], passes: vec![0; n], occupied_fraction: 0.25 }
    }

    /// Builds a grid with fixed states, mostly for fixtures and tests.
    pub fn from_states(geometry: GridGeometry, states: &[CellState]) -> Result<Self> {
        if states.len() != geometry.len() {
            return Err(Error::GeometryMismatch);
        }
        let mut g = Self::new(geometry);
        for (i, s) in states.iter().enumerate() {
            match s {
                CellState::Unknown => {}
                CellState::Free => g.passes[i] = 1,
                CellState::Occupied => g.hits[i] = 1,
            }
        }
        Ok(g)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn record_pass(&mut self, i: usize) {
        self.passes[i] = self.passes[i].saturating_add(1);
    }

    pub fn record_hit(&mut self, i: usize) {
        self.hits[i] = self.hits[i].saturating_add(1);
    }

    pub fn state(&self, i: usize) -> CellState {
        let (h, p) = (self.hits[i] as f64, self.passes[i] as f64);
        if h + p == 0.0 {
            CellState::Unknown
        } else if h / (h + p) >= self.occupied_fraction {
            CellState::Occupied
        } else {
            CellState::Free
        }
    }

    pub fn states(&self) -> Vec<CellState> {
        (0..self.geometry.len()).map(|i| self.state(i)).collect()
    }

    pub fn is_occupied(&self, i: usize) -> bool {
        self.state(i) == CellState::Occupied
    }

    /// Occupancy layer: `-1` for unknown cells, otherwise the hit fraction.
    pub fn to_layer(&self) -> GridLayer {
        let values = (0..self.geometry.len())
            .map(|i| {
                let (h, p) = (self.hits[i] as f64, self.passes[i] as f64);
                if h + p == 0.0 {
                    -1.0
                } else {
                    h / (h + p)
                }
            })
            .collect();
        GridLayer::from_values(self.geometry, Semantic::Occupancy, values).expect("length matches")
    }

    /// Inverse of [`OccupancyGrid::to_layer`] up to count scaling.
    pub fn from_layer(layer: &GridLayer) -> Self {
        let mut g = Self::new(layer.geometry);
        for (i, v) in layer.values.iter().enumerate() {
            if *v >= 0.0 {
                let h = (v * 1000.0).round() as u32;
                g.hits[i] = h;
                g.passes[i] = 1000 - h.min(1000);
            }
        }
        g
    }
}

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub measurement: PolarMeasurement,
    pub hit: bool,
}

/// Sensor model used to turn a scan into per-cell DP evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FovModel {
    /// Covariance of `(range, bearing)` noise.
    pub sensor_noise: [[f64; 2]; 2],
    pub max_range: f64,
}

impl Default for FovModel {
    fn default() -> Self {
        let bearing = 0.1f64.to_radians();
        Self { sensor_noise: [[0.02 * 0.02, 0.0], [0.0, bearing * bearing]], max_range: 5.0 }
    }
}

impl FovModel {
    fn noise(&self) -> Matrix2<f64> {
        let n = self.sensor_noise;
        Matrix2::new(n[0][0], n[0][1], n[1][0], n[1][1])
    }
}

/// Upper clamp for per-cell DP evidence, keeping log-odds finite.
const P_CEILING: f64 = 1.0 - 1e-15;

/// Log-odds evidence for a cell observed from `pose` at world point `target`.
pub fn cell_evidence(
    pose: &GaussianBelief,
    target: Point,
    noise: &Matrix2<f64>,
    sides: [f64; 2],
    min_range: f64,
) -> Result<f64> {
    let mu = pose.mean();
    let (dx, dy) = (target[0] - mu[0], target[1] - mu[1]);
    let range = dx.hypot(dy).max(min_range);
    let bearing = dy.atan2(dx) - mu[2];
    let m = PolarMeasurement::new(range, bearing)?;
    let (jp, jm) = polar_jacobians(mu[2], &m);
    let p3 = pose.covariance().fixed_view::<3, 3>(0, 0).into_owned();
    let cov = jp * p3 * jp.transpose() + jm * noise * jm.transpose();
    let p = rectangle_probability_2d(&cov, sides).map_err(|_| Error::DegenerateBelief)?;
    prob_to_logodds(p.clamp(f64::MIN_POSITIVE, P_CEILING))
}

/// Result of one field-of-view update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FovUpdate {
    /// Cells whose DP evidence was applied, in first-touch order.
    pub touched: Vec<CellIndex>,
}

/// Cells crossed by each beam, deduplicated in first-touch order, with the
/// cell indices of beam endpoints that hit something.
pub fn scan_cells(
    geometry: &GridGeometry,
    origin: Point,
    heading: f64,
    scan: &[Beam],
    max_range: f64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut seen = vec![false; geometry.len()];
    let mut order = Vec::new();
    let mut passes = Vec::new();
    let mut hits = Vec::new();
    for beam in scan {
        let m = beam.measurement;
        let range = if beam.hit { m.range } else { m.range.min(max_range) };
        let angle = m.bearing + heading;
        let end = [origin[0] + range * angle.cos(), origin[1] + range * angle.sin()];
        let cells = geometry.traverse(origin, end)?;
        let hit_cell = if beam.hit { geometry.world_to_cell(end).ok().map(|c| geometry.index(c)) } else { None };
        for c in cells {
            let i = geometry.index(c);
            if !seen[i] {
                seen[i] = true;
                order.push(i);
            }
            if Some(i) == hit_cell {
                hits.push(i);
            } else {
                passes.push(i);
            }
        }
    }
    Ok((order, passes, hits))
}

/// Applies a scan taken from `pose` to the DP grid and the occupancy layer.
///
/// Every cell crossed by a beam receives evidence computed from the polar
/// belief at that cell's own range and bearing, gated against its current
/// value once per scan. Beam endpoints that hit something count toward the
/// occupied state of their cell.
pub fn apply_fov(
    dp: &mut GridLayer,
    occupancy: &mut OccupancyGrid,
    pose: &GaussianBelief,
    scan: &[Beam],
    fov: &FovModel,
    prior: &PriorConstants,
    exec: Execution,
) -> Result<FovUpdate> {
    dp.same_geometry(occupancy.geometry())?;
    if pose.dimension() != 3 {
        return Err(Error::InvalidParameter("pose must be (x, y, phi)".into()));
    }
    if prior.dimension != 2 {
        return Err(Error::InvalidParameter("map prior must be planar".into()));
    }
    let mu = pose.mean();
    let origin = [mu[0], mu[1]];
    let geometry = dp.geometry;
    geometry.world_to_cell(origin)?;
    if scan.is_empty() {
        return Ok(FovUpdate::default());
    }
    let (order, passes, hits) = scan_cells(&geometry, origin, mu[2], scan, fov.max_range)?;
    let noise = fov.noise();
    let sides = [prior.sides[0], prior.sides[1]];
    let min_range = 0.5 * geometry.resolution;
    let evidence = exec::map_slice(&order, exec, |&i| {
        cell_evidence(pose, geometry.cell_to_world(geometry.cell(i)), &noise, sides, min_range)
    });
    for (&i, l_new) in order.iter().zip(evidence) {
        dp.values[i] = gated_update(dp.values[i], l_new?, prior.kappa, prior.ell_beta)?;
    }
    for i in passes {
        occupancy.record_pass(i);
    }
    for i in hits {
        occupancy.record_hit(i);
    }
    Ok(FovUpdate { touched: order.into_iter().map(|i| geometry.cell(i)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_spec() -> PriorSpec {
        PriorSpec::new(vec![2.0, 2.0, 0.02], vec![0.1, 0.1, 0.002], 0.5).unwrap()
    }

    fn sig4(a: f64, b: f64) -> bool {
        (a - b).abs() <= 5e-5 * b.abs()
    }

    #[test]
    fn logodds_examples() {
        assert_eq!(prob_to_logodds(0.5).unwrap(), 0.0);
        assert!(sig4(prob_to_logodds(1.5863e-5).unwrap(), -11.051));
        assert!(prob_to_logodds(0.0).is_err());
        assert!(prob_to_logodds(1.0).is_err());
        assert!(prob_to_logodds(f64::NAN).is_err());
    }

    #[test]
    fn logodds_round_trip_grid() {
        for k in 0..=2000 {
            let p = 1e-12 + (1.0 - 2e-12) * k as f64 / 2000.0;
            let back = logodds_to_prob(prob_to_logodds(p).unwrap());
            assert!((back - p).abs() <= 1e-12, "{p}");
        }
    }

    #[test]
    fn golden_prior() {
        let c = derive_prior(&paper_spec()).unwrap();
        assert!(sig4(c.beta, 1.5863e-5), "{}", c.beta);
        assert!(sig4(c.ell_beta, -11.051));
        assert!(sig4(c.a, 7.8358e-3));
        assert!(sig4(c.u_beta, 0.31186), "{}", c.u_beta);
        assert!(sig4(c.sigma_tilde_max, 0.43089));
    }

    #[test]
    fn planar_prior_bound_holds() {
        let c = derive_prior(&PriorSpec::planar(1.0, 0.1, 0.5).unwrap()).unwrap();
        let b = GaussianBelief::from_diagonal(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let oracle = rectangle_probability(&b, &RectangleSpec::new(vec![0.1, 0.1]).unwrap()).unwrap().probability;
        assert_eq!(c.beta, oracle);
        assert!(c.u_beta < c.sigma_tilde_max);
        assert_eq!(c.sigma_tilde_max, 1.0);
    }

    #[test]
    fn doubling_sides() {
        let c1 = derive_prior(&PriorSpec::planar(1.0, 0.1, 0.5).unwrap()).unwrap();
        let c2 = derive_prior(&PriorSpec::planar(1.0, 0.2, 0.5).unwrap()).unwrap();
        assert!((c2.a - 2.0 * c1.a).abs() < 1e-15);
        assert!(c2.beta > c1.beta);
    }

    #[test]
    fn prior_spec_rejects_out_of_domain_sides() {
        assert!(matches!(
            PriorSpec::new(vec![0.01, 1.0], vec![0.1, 0.1], 0.5),
            Err(Error::BoundDomainViolation { axes }) if axes == vec![0]
        ));
    }

    #[test]
    fn blend_examples() {
        assert_eq!(blend_update(2.0, 2.0, 0.5).unwrap(), 2.0);
        assert!((blend_update(-11.051, 0.0, 0.5).unwrap() + 5.5255).abs() < 1e-12);
        assert!(blend_update(0.0, 1.0, 1.5).is_err());
        assert!(blend_update(f64::INFINITY, 1.0, 0.5).is_err());
    }

    #[test]
    fn blend_converges_geometrically() {
        let (l0, target, kappa) = (-9.0, 3.0, 0.3);
        let mut l = l0;
        for n in 1..40 {
            l = blend_update(l, target, kappa).unwrap();
            let closed = target + (l0 - target) * (1.0f64 - kappa).powi(n);
            assert!((l - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_examples() {
        let lb = -11.051;
        assert_eq!(gated_update(-3.0, -6.0, 0.5, lb).unwrap(), -3.0);
        assert_eq!(gated_update(-3.0, -1.0, 0.5, lb).unwrap(), -2.0);
        assert!((gated_update(lb, -15.0, 0.5, lb).unwrap() + 13.0255).abs() < 1e-12);
    }

    fn open_grid() -> (GridLayer, OccupancyGrid, PriorConstants) {
        let g = GridGeometry::new(0.1, [0.0, 0.0], 100, 100).unwrap();
        let prior = derive_prior(&PriorSpec::planar(1.0, 0.1, 0.5).unwrap()).unwrap();
        (unknown_grid(g, &prior), OccupancyGrid::new(g), prior)
    }

    #[test]
    fn empty_scan_is_a_no_op() {
        let (mut dp, mut occ, prior) = open_grid();
        let before = dp.clone();
        let pose = GaussianBelief::from_diagonal(&[5.0, 5.0, 0.0], &[0.01, 0.01, 1e-4]).unwrap();
        let out = apply_fov(&mut dp, &mut occ, &pose, &[], &FovModel::default(), &prior, Execution::Sequential).unwrap();
        assert!(out.touched.is_empty());
        assert_eq!(dp, before);
    }

    #[test]
    fn pose_outside_grid_is_rejected() {
        let (mut dp, mut occ, prior) = open_grid();
        let pose = GaussianBelief::from_diagonal(&[50.0, 5.0, 0.0], &[0.01, 0.01, 1e-4]).unwrap();
        let beam = Beam { measurement: PolarMeasurement::new(1.0, 0.0).unwrap(), hit: true };
        let r = apply_fov(&mut dp, &mut occ, &pose, &[beam], &FovModel::default(), &prior, Execution::Sequential);
        assert!(matches!(r, Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn single_beam_marks_ray_and_endpoint() {
        let (mut dp, mut occ, prior) = open_grid();
        let pose = GaussianBelief::from_diagonal(&[2.05, 5.05, 0.0], &[1e-8, 1e-8, 1e-10]).unwrap();
        let beam = Beam { measurement: PolarMeasurement::new(2.0, 0.0).unwrap(), hit: true };
        let fov = FovModel { sensor_noise: [[1e-8, 0.0], [0.0, 1e-10]], max_range: 5.0 };
        let out = apply_fov(&mut dp, &mut occ, &pose, &[beam], &fov, &prior, Execution::Sequential).unwrap();
        // Integer traversal oracle: a horizontal ray from column 20 to column 40.
        let expected: Vec<CellIndex> = (20..=40).map(|col| CellIndex { col, row: 50 }).collect();
        assert_eq!(out.touched, expected);
        for c in &expected {
            assert!(dp.get(*c) > prior.ell_beta + 5.0);
        }
        let g = dp.geometry;
        assert_eq!(occ.state(g.index(CellIndex { col: 40, row: 50 })), CellState::Occupied);
        assert_eq!(occ.state(g.index(CellIndex { col: 30, row: 50 })), CellState::Free);
        assert_eq!(occ.state(g.index(CellIndex { col: 41, row: 50 })), CellState::Unknown);
    }

    #[test]
    fn reapplying_never_degrades_explored_cells() {
        let (mut dp, mut occ, prior) = open_grid();
        let pose = GaussianBelief::from_diagonal(&[5.0, 5.0, 0.3], &[0.04, 0.02, 1e-4]).unwrap();
        let scan: Vec<Beam> = (0..90)
            .map(|k| Beam { measurement: PolarMeasurement::new(3.0, k as f64 * 0.07 - 3.0).unwrap(), hit: k % 3 == 0 })
            .collect();
        let fov = FovModel::default();
        apply_fov(&mut dp, &mut occ, &pose, &scan, &fov, &prior, Execution::Sequential).unwrap();
        let first = dp.clone();
        let worse = GaussianBelief::from_diagonal(&[5.0, 5.0, 0.3], &[0.5, 0.5, 1e-4]).unwrap();
        apply_fov(&mut dp, &mut occ, &worse, &scan, &fov, &prior, Execution::Sequential).unwrap();
        for (a, b) in first.values.iter().zip(&dp.values) {
            if *a > prior.ell_beta {
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (mut a, mut oa, prior) = open_grid();
        let (mut b, mut ob, _) = open_grid();
        let pose = GaussianBelief::from_diagonal(&[5.0, 5.0, 0.0], &[0.02, 0.01, 1e-4]).unwrap();
        let scan: Vec<Beam> = (0..720)
            .map(|k| Beam { measurement: PolarMeasurement::new(4.0, (k as f64 * 0.5).to_radians()).unwrap(), hit: false })
            .collect();
        let fov = FovModel::default();
        apply_fov(&mut a, &mut oa, &pose, &scan, &fov, &prior, Execution::Sequential).unwrap();
        apply_fov(&mut b, &mut ob, &pose, &scan, &fov, &prior, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(oa, ob);
    }
}
