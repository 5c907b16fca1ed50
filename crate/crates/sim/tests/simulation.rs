use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siren_sim::consistency::two_landmark_nees;
use siren_sim::{kf_predict, kf_update, Extent, KfState, LidarSpec, NoiseParams, Observation, SimConfig, Simulator, WorldModel};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn noiseless() -> LidarSpec {
    LidarSpec { range_noise_std: 0.0, bearing_noise_std: 0.0, ..LidarSpec::default() }
}

fn room(w: f64, h: f64) -> WorldModel {
    WorldModel {
        walls: vec![[0.0, 0.0, w, 0.0], [w, 0.0, w, h], [w, h, 0.0, h], [0.0, h, 0.0, 0.0]],
        landmarks: Vec::new(),
        extent: Extent { min: [0.0, 0.0], max: [w, h] },
    }
}

// Independent intersection: solve origin + t d = a + u (b - a) by Cramer's rule.
fn brute_force(walls: &[[f64; 4]], o: [f64; 2], angle: f64, max_range: f64) -> Option<f64> {
    let d = [angle.cos(), angle.sin()];
    let mut best: Option<f64> = None;
    for w in walls {
        let e = [w[2] - w[0], w[3] - w[1]];
        let m = [[d[0], -e[0]], [d[1], -e[1]]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-15 {
            continue;
        }
        let rhs = [w[0] - o[0], w[1] - o[1]];
        let t = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let u = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
        if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) && t <= max_range {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    best
}

#[test]
fn centered_in_square_room() {
    let world = room(4.0, 4.0);
    let spec = noiseless();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scan = siren_sim::raycast_scan(&world, [2.0, 2.0, 0.0], &spec, &mut rng);
    assert_eq!(scan.len(), 720);
    let mut min = f64::INFINITY;
    for (beam, bearing) in scan.iter().zip(spec.bearings()) {
        let (c, s) = (bearing.cos().abs(), bearing.sin().abs());
        let expected = 2.0 / c.max(s);
        assert!(beam.hit);
        assert!((beam.measurement.range - expected).abs() < 1e-9, "{bearing}: {} vs {expected}", beam.measurement.range);
        min = min.min(beam.measurement.range);
    }
    assert!((min - 2.0).abs() < 1e-12);
}

#[test]
fn beams_with_nothing_in_range_report_max_range() {
    let world = room(40.0, 40.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scan = siren_sim::raycast_scan(&world, [20.0, 20.0, 0.3], &noiseless(), &mut rng);
    assert!(scan.iter().all(|b| !b.hit && b.measurement.range == 5.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raycast_matches_brute_force(
        w in 2.0..12.0f64, h in 2.0..12.0f64,
        fx in 0.05..0.95f64, fy in 0.05..0.95f64,
        inner in proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 0..6),
        phi in -3.0..3.0f64,
    ) {
        let mut world = room(w, h);
        for (a, b, c, d) in inner {
            world.walls.push([a * w, b * h, c * w, d * h]);
        }
        let pose = [fx * w, fy * h, phi];
        let spec = noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = siren_sim::raycast_scan(&world, pose, &spec, &mut rng);
        for (beam, bearing) in scan.iter().zip(spec.bearings()) {
            match brute_force(&world.walls, [pose[0], pose[1]], phi + bearing, spec.max_range) {
                Some(t) => {
                    prop_assert!(beam.hit);
                    prop_assert!((beam.measurement.range - t).abs() < 1e-9);
                }
                None => prop_assert!(!beam.hit && beam.measurement.range == spec.max_range),
            }
        }
    }

    #[test]
    fn covariance_stays_symmetric(ops in proptest::collection::vec((0u8..3, -1.0..1.0f64, -1.0..1.0f64, 0u32..5), 1..60)) {
        let noise = NoiseParams { q: [[0.02, 0.005], [0.005, 0.01]], r: [[0.01, -0.002], [-0.002, 0.03]], ..NoiseParams::default() };
        let mut s = KfState::new([0.0, 0.0], &noise);
        for (kind, a, b, id) in ops {
            s = match kind {
                0 => kf_predict(&s, [a, b], &noise),
                _ => {
                    let trace = s.p.trace();
                    let known = s.registry.contains_key(&id);
                    let next = kf_update(&s, &[Observation { id, z: [a, b] }], &noise).unwrap();
                    if known {
                        prop_assert!(next.p.trace() <= trace + 1e-12);
                    }
                    next
                }
            };
            prop_assert!((&s.p - s.p.transpose()).abs().max() < 1e-9);
            prop_assert_eq!(s.x.len(), 2 + 2 * s.registry.len());
        }
    }
}

#[test]
fn stationary_reobservation_matches_scalar_filter() {
    let noise = NoiseParams::default();
    let mut s = KfState::new([0.0, 0.0], &noise);
    s = kf_update(&s, &[Observation { id: 3, z: [1.0, 1.0] }], &noise).unwrap();
    // Per axis the state is (robot, landmark) with covariance [[p, p], [p, p + r]].
    let (q, r) = (0.0, 0.01);
    let mut a = [[0.01, 0.01], [0.01, 0.02]];
    for _ in 0..12 {
        s = kf_update(&s, &[Observation { id: 3, z: [1.0, 1.0] }], &noise).unwrap();
        a[0][0] += q;
        // h = [-1, 1]
        let ph = [a[0][1] - a[0][0], a[1][1] - a[1][0]];
        let sv = ph[1] - ph[0] + r;
        let k = [ph[0] / sv, ph[1] / sv];
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = a[i][j] - k[i] * sv * k[j];
            }
        }
        a = next;
        for axis in 0..2 {
            assert!((s.p[(axis, axis)] - a[0][0]).abs() < 1e-9);
            assert!((s.p[(2 + axis, 2 + axis)] - a[1][1]).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_measurement_removes_relative_uncertainty() {
    let noise = NoiseParams::default();
    let exact = NoiseParams { r: [[0.0; 2]; 2], ..NoiseParams::default() };
    let mut s = KfState::new([0.0, 0.0], &noise);
    s = kf_update(&s, &[Observation { id: 0, z: [1.0, 0.0] }], &noise).unwrap();
    s = kf_predict(&s, [0.1, 0.0], &noise);
    s = kf_update(&s, &[Observation { id: 0, z: [0.9, 0.0] }], &exact).unwrap();
    for a in 0..2 {
        let rel = s.p[(a, a)] + s.p[(2 + a, 2 + a)] - 2.0 * s.p[(a, 2 + a)];
        assert!(rel.abs() < 1e-12, "{rel}");
    }
}

#[test]
fn robot_nees_is_consistent() {
    let chi = ChiSquared::new(2.0).unwrap();
    let (lo, hi) = (chi.inverse_cdf(0.025), chi.inverse_cdf(0.975));
    let inside = (0..100u64).filter(|&seed| {
        let nees = *two_landmark_nees(seed, 60).last().unwrap();
        (lo..=hi).contains(&nees)
    });
    assert!(inside.count() >= 90);
}

#[test]
fn identical_seeds_replay_bit_for_bit() {
    let fixture = siren_sim::Fixture::bundled("warehouse").unwrap();
    let run = |seed| {
        let mut sim = Simulator::new(fixture.world.clone(), fixture.start("P1").unwrap(), SimConfig::default(), seed);
        let mut log = Vec::new();
        for k in 0..30 {
            let sensed = sim.sense();
            sim.update(&sensed.observations).unwrap();
            log.push((sim.truth(), sim.kf().clone(), sensed.scan));
            sim.step([0.3 * (k as f64 * 0.2).cos(), -0.3]);
        }
        log
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11)[5].0, run(12)[5].0);
}

#[test]
fn blocked_moves_leave_the_robot_in_place() {
    let world = room(4.0, 4.0);
    let config = SimConfig { motion_noise: false, ..SimConfig::default() };
    let mut sim = Simulator::new(world, [3.9, 2.0], config, 0);
    let u = sim.step([0.25, 0.0]);
    assert_eq!(u, [0.0, 0.0]);
    assert_eq!(sim.truth()[0], 3.9);
    assert!((sim.kf().robot_covariance()[(0, 0)] - 0.02).abs() < 1e-15);
}

#[test]
fn steps_are_clipped() {
    let world = room(10.0, 10.0);
    let config = SimConfig { motion_noise: false, ..SimConfig::default() };
    let mut sim = Simulator::new(world, [5.0, 5.0], config, 0);
    let u = sim.step([3.0, 4.0]);
    assert!((u[0] - 0.15).abs() < 1e-12 && (u[1] - 0.2).abs() < 1e-12);
    assert!((sim.heading() - (4.0f64).atan2(3.0)).abs() < 1e-12);
}
