//! Uncertainty maps, frontier extraction and the SiREn map metric.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::belief::{logodds_to_prob, CellState, OccupancyGrid, PriorConstants};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::{central_gradient, CellIndex, GridGeometry, GridLayer, Point, Semantic};

/// Per-cell `U = a / p^(1/N)`; cells still at `l_beta` get exactly `U_beta`.
pub fn build_uncertainty_map(dp: &GridLayer, prior: &PriorConstants, exec: Execution) -> GridLayer {
    let values = exec::map_slice(&dp.values, exec, |&l| {
        if l == prior.ell_beta {
            prior.u_beta
        } else {
            prior.uncertainty_of(logodds_to_prob(l))
        }
    });
    GridLayer { geometry: dp.geometry, semantic: Semantic::Uncertainty, values }
}

/// Cells whose log-odds have moved off the prior.
pub fn explored_mask(dp: &GridLayer, prior: &PriorConstants) -> Vec<bool> {
    dp.values.iter().map(|l| *l != prior.ell_beta).collect()
}

/// What the frontier threshold is compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `|grad U| * 2c`: the uncertainty jump across the central-difference stencil.
    #[default]
    Jump,
    /// `|grad U|` in uncertainty units per meter.
    RawGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierParams {
    pub t_h: f64,
    pub obstacle_clearance: f64,
    pub u_beta: f64,
    pub dimension: usize,
    pub min_cluster_cells: usize,
    pub mode: ThresholdMode,
}

impl FrontierParams {
    pub fn new(t_h: f64, prior: &PriorConstants) -> Result<Self> {
        let p = Self {
            t_h,
            obstacle_clearance: 0.5,
            u_beta: prior.u_beta,
            dimension: prior.dimension,
            min_cluster_cells: 3,
            mode: ThresholdMode::Jump,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_h > 0.0) || self.t_h > self.u_beta {
            return Err(Error::InvalidParameter(format!("threshold {} outside (0, U_beta = {}]", self.t_h, self.u_beta)));
        }
        if !(self.obstacle_clearance >= 0.0) {
            return Err(Error::InvalidParameter("obstacle clearance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontierKind {
    Classical,
    Uncertainty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierCell {
    pub cell: CellIndex,
    /// `|grad U|`, uncertainty units per meter.
    pub gradient: f64,
    /// Uncertainty jump across the stencil, `|grad U| * 2c`.
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCluster {
    pub id: usize,
    pub kind: FrontierKind,
    pub cells: Vec<CellIndex>,
    pub mean_gradient: f64,
    pub mean_jump: f64,
    pub max_jump: f64,
    pub centroid: Point,
    /// Member cell closest to the centroid.
    pub target: CellIndex,
    /// Distinct unexplored cells 8-adjacent to the cluster.
    pub unexplored_neighbors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontierSet {
    pub uf_cells: Vec<FrontierCell>,
    pub cf_cells: Vec<CellIndex>,
    pub clusters: Vec<FrontierCluster>,
}

impl FrontierSet {
    pub fn clusters_of(&self, kind: FrontierKind) -> impl Iterator<Item = &FrontierCluster> {
        self.clusters.iter().filter(move |c| c.kind == kind)
    }

    /// Union of two partial sets, renumbering cluster ids.
    pub fn merge(mut self, other: FrontierSet) -> FrontierSet {
        self.uf_cells.extend(other.uf_cells);
        self.cf_cells.extend(other.cf_cells);
        self.clusters.extend(other.clusters);
        for (i, c) in self.clusters.iter_mut().enumerate() {
            c.id = i;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Cells whose centers lie within `clearance` of an occupied cell center.
pub fn clearance_mask(occupancy: &OccupancyGrid, clearance: f64) -> Vec<bool> {
    let g = occupancy.geometry();
    let mut mask = vec![false; g.len()];
    let reach = (clearance / g.resolution).floor() as isize;
    let limit = (clearance / g.resolution).powi(2) + 1e-9;
    let offsets: Vec<(isize, isize)> = (-reach..=reach)
        .flat_map(|dr| (-reach..=reach).map(move |dc| (dc, dr)))
        .filter(|&(dc, dr)| ((dc * dc + dr * dr) as f64) <= limit)
        .collect();
    for i in 0..g.len() {
        if !occupancy.is_occupied(i) {
            continue;
        }
        let c = g.cell(i);
        for &(dc, dr) in &offsets {
            let (col, row) = (c.col as isize + dc, c.row as isize + dr);
            if col >= 0 && row >= 0 && (col as usize) < g.width && (row as usize) < g.height {
                mask[row as usize * g.width + col as usize] = true;
            }
        }
    }
    mask
}

/// 8-connected components of `mask`, seeded in row-major order.
fn components(g: &GridGeometry, mask: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for n in g.neighbors8(g.cell(i)) {
                let j = g.index(n);
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

fn build_cluster(
    g: &GridGeometry,
    kind: FrontierKind,
    members: &[usize],
    gradient: &[f64],
    jump: &[f64],
    explored: &[bool],
) -> FrontierCluster {
    let n = members.len() as f64;
    let centers: Vec<Point> = members.iter().map(|&i| g.cell_to_world(g.cell(i))).collect();
    let centroid = [
        centers.iter().map(|p| p[0]).sum::<f64>() / n,
        centers.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let nearest = members
        .iter()
        .zip(&centers)
        .min_by(|a, b| {
            let da = (a.1[0] - centroid[0]).hypot(a.1[1] - centroid[1]);
            let db = (b.1[0] - centroid[0]).hypot(b.1[1] - centroid[1]);
            da.total_cmp(&db)
        })
        .map(|(&i, _)| i)
        .expect("clusters are non-empty");
    let mut unexplored: Vec<usize> = members
        .iter()
        .flat_map(|&i| g.neighbors8(g.cell(i)).map(|c| g.index(c)).collect::<Vec<_>>())
        .filter(|&j| !explored[j])
        .collect();
    unexplored.sort_unstable();
    unexplored.dedup();
    FrontierCluster {
        id: 0,
        kind,
        cells: members.iter().map(|&i| g.cell(i)).collect(),
        mean_gradient: members.iter().map(|&i| gradient[i]).sum::<f64>() / n,
        mean_jump: members.iter().map(|&i| jump[i]).sum::<f64>() / n,
        max_jump: members.iter().map(|&i| jump[i]).fold(0.0, f64::max),
        centroid,
        target: g.cell(nearest),
        unexplored_neighbors: unexplored.len(),
    }
}

/// Uncertainty frontiers: cells whose UM gradient clears the threshold, minus
/// unexplored-or-worse cells and cells near obstacles.
pub fn extract_uncertainty_frontiers(
    um: &GridLayer,
    occupancy: &OccupancyGrid,
    params: &FrontierParams,
) -> Result<FrontierSet> {
    params.validate()?;
    um.same_geometry(occupancy.geometry())?;
    let g = um.geometry;
    let field = central_gradient(um)?;
    let gradient: Vec<f64> = (0..g.len()).map(|i| field.magnitude(i)).collect();
    let jump: Vec<f64> = gradient.iter().map(|m| m * 2.0 * g.resolution).collect();
    let score = match params.mode {
        ThresholdMode::Jump => &jump,
        ThresholdMode::RawGradient => &gradient,
    };
    let blocked = clearance_mask(occupancy, params.obstacle_clearance);
    let mask: Vec<bool> =
        (0..g.len()).map(|i| score[i] > params.t_h && um.values[i] < params.u_beta && !blocked[i]).collect();
    let explored: Vec<bool> = um.values.iter().map(|u| *u != params.u_beta).collect();
    let clusters: Vec<FrontierCluster> = components(&g, &mask)
        .into_iter()
        .filter(|m| m.len() >= params.min_cluster_cells)
        .map(|m| build_cluster(&g, FrontierKind::Uncertainty, &m, &gradient, &jump, &explored))
        .collect();
    let uf_cells = clusters
        .iter()
        .flat_map(|c| c.cells.iter())
        .map(|&cell| {
            let i = g.index(cell);
            FrontierCell { cell, gradient: gradient[i], jump: jump[i] }
        })
        .collect();
    Ok(FrontierSet { uf_cells, cf_cells: Vec::new(), clusters }.merge(FrontierSet::default()))
}

/// Classical frontiers: free, explored cells with an unexplored 8-neighbour,
/// minus cells near obstacles.
pub fn extract_classical_frontiers(
    occupancy: &OccupancyGrid,
    explored: &[bool],
    params: &FrontierParams,
) -> Result<FrontierSet> {
    let g = *occupancy.geometry();
    if explored.len() != g.len() {
        return Err(Error::GeometryMismatch);
    }
    let blocked = clearance_mask(occupancy, params.obstacle_clearance);
    let mask: Vec<bool> = (0..g.len())
        .map(|i| {
            explored[i]
                && occupancy.state(i) == CellState::Free
                && !blocked[i]
                && g.neighbors8(g.cell(i)).any(|n| !explored[g.index(n)])
        })
        .collect();
    let zeros = vec![0.0; g.len()];
    let clusters: Vec<FrontierCluster> = components(&g, &mask)
        .into_iter()
        .filter(|m| m.len() >= params.min_cluster_cells)
        .map(|m| build_cluster(&g, FrontierKind::Classical, &m, &zeros, &zeros, explored))
        .collect();
    let cf_cells = clusters.iter().flat_map(|c| c.cells.iter().copied()).collect();
    Ok(FrontierSet { uf_cells: Vec::new(), cf_cells, clusters }.merge(FrontierSet::default()))
}

/// Gaussian KL divergence between isotropic `N`-dimensional beliefs with
/// geometric-mean deviations `sigma` and `sigma_max`.
pub fn kl_term_sigma(sigma: f64, sigma_max: f64, n: usize) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DomainError { what: "sigma", value: sigma });
    }
    if !(sigma_max > 0.0) || !sigma_max.is_finite() {
        return Err(Error::DomainError { what: "sigma_max", value: sigma_max });
    }
    let n = n as f64;
    let r = sigma / sigma_max;
    Ok((-n * r.ln() - 0.5 * n + 0.5 * n * r * r).max(0.0))
}

/// DP form of the KL term: `ln(p / beta) - N/2 + (N/2) (beta / p)^(2/N)`.
pub fn kl_term_dp(p: f64, beta: f64, n: usize) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::DomainError { what: "p", value: p });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::DomainError { what: "beta", value: beta });
    }
    let nf = n as f64;
    let ratio = (beta / p).powf(2.0 / nf);
    Ok(((p / beta).ln() - 0.5 * nf + 0.5 * nf * ratio).max(0.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SirenMode {
    /// Closed-form KL with the UM value as the cell's deviation.
    ClosedFormSigma,
    #[default]
    DpApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirenParams {
    pub beta: f64,
    pub sigma_max: f64,
    pub dimension: usize,
    pub a: f64,
    pub mode: SirenMode,
}

impl SirenParams {
    pub fn from_prior(prior: &PriorConstants, mode: SirenMode) -> Self {
        Self { beta: prior.beta, sigma_max: prior.sigma_tilde_max, dimension: prior.dimension, a: prior.a, mode }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirenReport {
    pub total: f64,
    /// Sum of the positive contributions.
    pub positive: f64,
    /// Sum of the negative contributions (non-positive).
    pub negative: f64,
    pub explored_cells: usize,
    pub cell_area: f64,
    /// Signed, area-weighted contribution of every cell, row-major.
    pub terms: Vec<f64>,
}

impl SirenReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Signed relative entropy of a DP grid against the maximum-uncertainty
/// reference. Cells at `l_beta` contribute nothing.
pub fn siren(dp: &GridLayer, prior: &PriorConstants, params: &SirenParams, exec: Execution) -> Result<SirenReport> {
    if !(params.beta > 0.0 && params.beta < 1.0) || !(params.sigma_max > 0.0) {
        return Err(Error::InvalidParameter("SiREn reference must have beta in (0, 1) and sigma_max > 0".into()));
    }
    let area = dp.geometry.cell_area();
    let n = params.dimension;
    let terms: Vec<Result<f64>> = exec::map_slice(&dp.values, exec, |&l| {
        if l == prior.ell_beta {
            return Ok(0.0);
        }
        let p = logodds_to_prob(l);
        let sign = if p > params.beta {
            1.0
        } else if p < params.beta {
            -1.0
        } else {
            0.0
        };
        let kl = match params.mode {
            SirenMode::DpApproximation => kl_term_dp(p, params.beta, n)?,
            SirenMode::ClosedFormSigma => {
                kl_term_sigma(params.a / p.powf(1.0 / n as f64), params.sigma_max, n)?
            }
        };
        Ok(area * kl * sign)
    });
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    let explored: Vec<f64> = dp
        .values
        .iter()
        .zip(&terms)
        .filter(|(l, _)| **l != prior.ell_beta)
        .map(|(_, t)| *t)
        .collect();
    let positive: Vec<f64> = explored.iter().map(|t| t.max(0.0)).collect();
    let negative: Vec<f64> = explored.iter().map(|t| t.min(0.0)).collect();
    Ok(SirenReport {
        total: exec::sum(&explored, exec),
        positive: exec::sum(&positive, exec),
        negative: exec::sum(&negative, exec),
        explored_cells: explored.len(),
        cell_area: area,
        terms,
    })
}

/// Signed one-dimensional KL curve against `N(0, sigma_max^2)`.
pub fn siren_curve(sigmas: &[f64], sigma_max: f64) -> Result<Vec<(f64, f64)>> {
    sigmas
        .iter()
        .map(|&s| {
            let kl = kl_term_sigma(s, sigma_max, 1)?;
            let signed = if s < sigma_max {
                kl
            } else if s > sigma_max {
                -kl
            } else {
                0.0
            };
            Ok((s, signed))
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(mut out: W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "sigma,signed_kl")?;
    for (s, v) in rows {
        writeln!(out, "{s},{v}")?;
    }
    Ok(())
}
