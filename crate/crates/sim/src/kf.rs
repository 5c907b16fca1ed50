//! Linear KF-SLAM over robot position and 2D landmark positions with known heading.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use siren_core::dispersion::GaussianBelief;
use siren_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub q: [[f64; 2]; 2],
    pub r: [[f64; 2]; 2],
    pub p0: [[f64; 2]; 2],
}

impl Default for NoiseParams {
    fn default() -> Self {
        let d = [[0.01, 0.0], [0.0, 0.01]];
        Self { q: d, r: d, p0: d }
    }
}

pub(crate) fn mat2(m: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// Relative landmark measurement `z = landmark - robot + v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: u32,
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfState {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Landmark id to the offset of its `x` coordinate in the state.
    pub registry: BTreeMap<u32, usize>,
}

impl KfState {
    pub fn new(robot: [f64; 2], noise: &NoiseParams) -> Self {
        let mut p = DMatrix::zeros(2, 2);
        p.fixed_view_mut::<2, 2>(0, 0).copy_from(&mat2(&noise.p0));
        Self { x: DVector::from_row_slice(&robot), p, registry: BTreeMap::new() }
    }

    pub fn robot(&self) -> [f64; 2] {
        [self.x[0], self.x[1]]
    }

    pub fn robot_covariance(&self) -> Matrix2<f64> {
        self.p.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn landmark(&self, id: u32) -> Option<([f64; 2], Matrix2<f64>)> {
        self.registry.get(&id).map(|&o| ([self.x[o], self.x[o + 1]], self.p.fixed_view::<2, 2>(o, o).into_owned()))
    }

    /// `|P_l|^(1/4)` for a registered landmark.
    pub fn landmark_sigma(&self, id: u32) -> Option<f64> {
        self.landmark(id).map(|(_, c)| c.determinant().max(0.0).powf(0.25))
    }

    pub fn robot_sigma(&self) -> f64 {
        self.robot_covariance().determinant().max(0.0).powf(0.25)
    }

    pub fn landmark_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.registry.keys().copied()
    }

    /// Robot-block normalized estimation error squared against `truth`.
    pub fn robot_nees(&self, truth: [f64; 2]) -> Option<f64> {
        let e = Vector2::new(truth[0] - self.x[0], truth[1] - self.x[1]);
        self.robot_covariance().try_inverse().map(|inv| (e.transpose() * inv * e)[(0, 0)])
    }
}

/// `X <- X + B u`, `P <- P + blockdiag(Q, 0)`.
pub fn kf_predict(state: &KfState, u: [f64; 2], noise: &NoiseParams) -> KfState {
    let mut next = state.clone();
    next.x[0] += u[0];
    next.x[1] += u[1];
    let mut block = next.p.fixed_view_mut::<2, 2>(0, 0);
    block += mat2(&noise.q);
    next
}

/// Registers unseen landmarks from their first measurement and applies a
/// Joseph-form update for the rest.
pub fn kf_update(state: &KfState, observations: &[Observation], noise: &NoiseParams) -> Result<KfState> {
    let mut ids: Vec<u32> = observations.iter().map(|o| o.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("landmark observed twice in one batch".into()));
    }
    if observations.iter().flat_map(|o| o.z).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite observation".into()));
    }
    let r = mat2(&noise.r);
    let mut next = state.clone();
    let known: Vec<&Observation> = observations.iter().filter(|o| state.registry.contains_key(&o.id)).collect();

    if !known.is_empty() {
        let n = next.x.len();
        let m = 2 * known.len();
        let mut h = DMatrix::zeros(m, n);
        let mut innovation = DVector::zeros(m);
        let mut rr = DMatrix::zeros(m, m);
        for (k, o) in known.iter().enumerate() {
            let off = next.registry[&o.id];
            for a in 0..2 {
                h[(2 * k + a, off + a)] = 1.0;
                h[(2 * k + a, a)] = -1.0;
                innovation[2 * k + a] = o.z[a] - (next.x[off + a] - next.x[a]);
            }
            rr.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(&r);
        }
        let s = &h * &next.p * h.transpose() + &rr;
        let s_inv = s
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::InvalidCovariance("innovation covariance not positive definite".into()))?;
        let gain = &next.p * h.transpose() * s_inv;
        next.x += &gain * innovation;
        let i_kh = DMatrix::identity(n, n) - &gain * &h;
        let p = &i_kh * &next.p * i_kh.transpose() + &gain * &rr * gain.transpose();
        next.p = (&p + p.transpose()) * 0.5;
    }

    for o in observations.iter().filter(|o| !state.registry.contains_key(&o.id)) {
        let n = next.x.len();
        let mut x = next.x.clone().resize_vertically(n + 2, 0.0);
        x[n] = next.x[0] + o.z[0];
        x[n + 1] = next.x[1] + o.z[1];
        let mut p = next.p.clone().resize(n + 2, n + 2, 0.0);
        // Cross-covariance with everything equals the robot rows.
        for i in 0..n {
            for a in 0..2 {
                p[(n + a, i)] = next.p[(a, i)];
                p[(i, n + a)] = next.p[(i, a)];
            }
        }
        let prr = next.robot_covariance() + r;
        p.fixed_view_mut::<2, 2>(n, n).copy_from(&prr);
        next.x = x;
        next.p = p;
        next.registry.insert(o.id, n);
    }
    Ok(next)
}

/// Belief over `(x, y, phi)` with the filter's position block and an
/// independent heading.
pub fn pose_belief(state: &KfState, heading: f64, heading_var: f64) -> Result<GaussianBelief> {
    if !(heading_var > 0.0) {
        return Err(Error::DegenerateBelief);
    }
    let c = state.robot_covariance();
    let cov = DMatrix::from_row_slice(3, 3, &[c[(0, 0)], c[(0, 1)], 0.0, c[(1, 0)], c[(1, 1)], 0.0, 0.0, 0.0, heading_var]);
    GaussianBelief::new(DVector::from_row_slice(&[state.x[0], state.x[1], heading]), cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use siren_core::dispersion::geometric_mean_sigma;

    #[test]
    fn predicts_accumulate_q() {
        let noise = NoiseParams::default();
        let mut s = KfState::new([1.0, 2.0], &noise);
        for n in 1..=25 {
            s = kf_predict(&s, [0.0, 0.0], &noise);
            assert_eq!(s.robot(), [1.0, 2.0]);
            assert!((s.p[(0, 0)] - (0.01 + 0.01 * n as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_update_is_identity() {
        let noise = NoiseParams::default();
        let s = KfState::new([0.0, 0.0], &noise);
        assert_eq!(kf_update(&s, &[], &noise).unwrap(), s);
    }

    #[test]
    fn augmentation_and_landmark_block() {
        let noise = NoiseParams::default();
        let s = KfState::new([1.0, 1.0], &noise);
        let s = kf_update(&s, &[Observation { id: 4, z: [2.0, -1.0] }], &noise).unwrap();
        let (pos, cov) = s.landmark(4).unwrap();
        assert_eq!(pos, [3.0, 0.0]);
        assert!((cov[(0, 0)] - 0.02).abs() < 1e-15);
        assert_eq!(s.p[(2, 0)], 0.01);
        let predicted = kf_predict(&s, [0.5, 0.0], &noise);
        assert_eq!(predicted.landmark(4), s.landmark(4));
    }

    #[test]
    fn exact_measurement_collapses_relative_uncertainty() {
        let mut noise = NoiseParams::default();
        let s = KfState::new([0.0, 0.0], &noise);
        let s = kf_update(&s, &[Observation { id: 1, z: [1.0, 1.0] }], &noise).unwrap();
        let s = kf_predict(&s, [0.3, 0.0], &noise);
        noise.r = [[1e-14, 0.0], [0.0, 1e-14]];
        let s = kf_update(&s, &[Observation { id: 1, z: [0.7, 1.0] }], &noise).unwrap();
        // Variance of (landmark - robot) along x.
        let rel = s.p[(2, 2)] + s.p[(0, 0)] - 2.0 * s.p[(0, 2)];
        assert!(rel.abs() < 1e-12);
    }

    #[test]
    fn pose_belief_assembly() {
        let noise = NoiseParams::default();
        let s = KfState::new([0.0, 0.0], &noise);
        let b = pose_belief(&s, 0.3, 1e-4).unwrap();
        assert_eq!(b.covariance()[(0, 0)], 0.01);
        assert_eq!(b.covariance()[(2, 2)], 1e-4);
        let g = geometric_mean_sigma(&b).unwrap();
        assert!((g - (0.01f64 * 0.01 * 1e-4).powf(1.0 / 6.0)).abs() < 1e-12);
        assert!((g - 0.0464).abs() < 1e-4);
        assert!(matches!(pose_belief(&s, 0.0, 0.0), Err(Error::DegenerateBelief)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let noise = NoiseParams::default();
        let s = KfState::new([0.0, 0.0], &noise);
        let obs = [Observation { id: 1, z: [1.0, 0.0] }, Observation { id: 1, z: [1.0, 0.0] }];
        assert!(kf_update(&s, &obs, &noise).is_err());
    }
}
