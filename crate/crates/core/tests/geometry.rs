mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_mill::metrics::{fatness, tangentness, CirclinessTracker, SwarmSnapshot};
use swarm_mill::sim::{spawn, AgentState, Cone, WorldConfig, WorldState};

fn snapshot(rng: &mut impl Rng, n: usize) -> SwarmSnapshot {
    SwarmSnapshot::new(
        (0..n)
            .map(|_| (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect(),
        (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
    )
}

fn moved(s: &SwarmSnapshot, angle: f64, shift: (f64, f64), scale: f64) -> SwarmSnapshot {
    let (sn, cs) = angle.sin_cos();
    SwarmSnapshot::new(
        s.positions
            .iter()
            .map(|&(x, y)| (scale * (cs * x - sn * y) + shift.0, scale * (sn * x + cs * y) + shift.1))
            .collect(),
        s.headings.iter().map(|h| h + angle).collect(),
    )
}

#[test]
fn metrics_match_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let n = rng.random_range(2..30);
        let s = snapshot(&mut rng, n);
        assert!((fatness(&s) - common::direct_fatness(&s.positions)).abs() <= 1e-12);
        assert!((tangentness(&s) - common::direct_tangentness(&s.positions, &s.headings)).abs() <= 1e-12);
    }
}

#[test]
fn tracker_matches_naive_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let window = 17;
    let mut t = CirclinessTracker::new(window);
    let mut phis = Vec::new();
    let mut taus = Vec::new();
    for k in 0..200 {
        let s = snapshot(&mut rng, 8);
        phis.push(fatness(&s));
        taus.push(tangentness(&s));
        let got = t.push(&s).lambda;
        if k + 1 < window {
            assert_eq!(got, None);
        } else {
            let a = phis[k + 1 - window..].iter().sum::<f64>() / window as f64;
            let b = taus[k + 1 - window..].iter().sum::<f64>() / window as f64;
            assert!((got.unwrap() - (1.0 - a.max(b))).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn metrics_are_rigid_motion_invariant(seed in any::<u64>(), angle in -PI..PI, dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = snapshot(&mut rng, 10);
        let m = moved(&s, angle, (dx, dy), 1.0);
        prop_assert!((fatness(&s) - fatness(&m)).abs() <= 1e-12);
        prop_assert!((tangentness(&s) - tangentness(&m)).abs() <= 1e-12);
    }

    #[test]
    fn metrics_are_scale_invariant(seed in any::<u64>(), scale in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = snapshot(&mut rng, 10);
        let m = moved(&s, 0.0, (0.0, 0.0), scale);
        prop_assert!((fatness(&s) - fatness(&m)).abs() <= 1e-10);
        prop_assert!((tangentness(&s) - tangentness(&m)).abs() <= 1e-10);
    }

    #[test]
    fn metrics_stay_in_unit_interval(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = snapshot(&mut rng, n);
        prop_assert!((0.0..=1.0).contains(&fatness(&s)));
        prop_assert!((0.0..=1.0).contains(&tangentness(&s)));
    }

    #[test]
    fn sensor_matches_sector_distance(
        ax in -2.0..2.0f64, ay in -2.0..2.0f64, th in 0.0..TAU,
        bx in -6.0..6.0f64, by in -6.0..6.0f64,
    ) {
        let cfg = WorldConfig::default();
        let cone = Cone::new(&AgentState::at(ax, ay, th), &cfg);
        let d = common::sector_distance((ax, ay), cone.heading, cone.half_angle, cone.range, (bx, by));
        let r = cfg.agent_radius;
        // Skip configurations within rounding distance of tangency.
        prop_assume!((d - r).abs() > 1e-9);
        prop_assert_eq!(cone.hits_disc(bx, by, r), d < r);
    }

    #[test]
    fn any_sampled_disc_point_in_cone_implies_detection(
        th in 0.0..TAU, bx in -4.0..4.0f64, by in -4.0..4.0f64, seed in any::<u64>(),
    ) {
        let cfg = WorldConfig::default();
        let cone = Cone::new(&AgentState::at(0.0, 0.0, th), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = cfg.agent_radius;
        let seen = (0..400).any(|_| {
            let a = rng.random_range(0.0..TAU);
            let rho = r * rng.random_range(0.0f64..1.0).sqrt();
            cone.contains_point(bx + rho * a.cos(), by + rho * a.sin())
        });
        if seen {
            prop_assert!(cone.hits_disc(bx, by, r));
        }
    }

    #[test]
    fn sensing_is_monotone_in_range_and_fov(
        th in 0.0..TAU, bx in -6.0..6.0f64, by in -6.0..6.0f64,
        range in 0.5..3.6f64, fov in 0.05..0.4f64,
    ) {
        let small = WorldConfig { sense_range: range, fov, ..Default::default() };
        let big = WorldConfig::default();
        let a = AgentState::at(0.0, 0.0, th);
        let r = big.agent_radius;
        if Cone::new(&a, &small).hits_disc(bx, by, r) {
            prop_assert!(Cone::new(&a, &big).hits_disc(bx, by, r));
        }
    }

    #[test]
    fn sensing_is_mirror_symmetric(th in 0.0..TAU, bx in -6.0..6.0f64, by in -6.0..6.0f64) {
        let cfg = WorldConfig::default();
        let r = cfg.agent_radius;
        let d = common::sector_distance((0.0, 0.0), th, cfg.half_fov(), cfg.sense_range, (bx, by));
        prop_assume!((d - r).abs() > 1e-9);
        let a = Cone::new(&AgentState::at(0.0, 0.0, th), &cfg).hits_disc(bx, by, r);
        let b = Cone::new(&AgentState::at(0.0, 0.0, -th), &cfg).hits_disc(bx, -by, r);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn free_agent_follows_discrete_arc(v in -0.2..0.2f64, omega in -2.0..2.0f64, th in 0.0..TAU, k in 1u64..300) {
        prop_assume!(omega.abs() > 1e-6);
        let cfg = WorldConfig::default();
        let mut w = WorldState::new(vec![AgentState::at(0.0, 0.0, th), AgentState::at(500.0, 500.0, 0.0)]);
        for _ in 0..k {
            w.step(&[(v, omega), (0.0, 0.0)], &cfg);
        }
        // Sum of k chords of length vΔt turning by α each: a geometric series.
        let alpha = omega * cfg.dt;
        let scale = v * cfg.dt * ((k as f64) * alpha / 2.0).sin() / (alpha / 2.0).sin();
        let dir = th + (k as f64 - 1.0) * alpha / 2.0;
        prop_assert!((w.agents[0].x - scale * dir.cos()).abs() < 1e-9);
        prop_assert!((w.agents[0].y - scale * dir.sin()).abs() < 1e-9);
        let want = (th + k as f64 * alpha).rem_euclid(TAU);
        let diff = (w.agents[0].theta - want).abs();
        prop_assert!(diff.min(TAU - diff) < 1e-9);
        prop_assert!((0.0..TAU).contains(&w.agents[0].theta));
    }

    #[test]
    fn collisions_leave_pairs_separated(seed in any::<u64>(), steps in 1usize..60) {
        let cfg = WorldConfig::default();
        let mut w = spawn(&cfg, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..steps {
            let ctl: Vec<(f64, f64)> = (0..w.agents.len())
                .map(|_| (rng.random_range(-0.2..0.2), rng.random_range(-2.0..2.0)))
                .collect();
            let rep = w.step(&ctl, &cfg);
            if rep.collisions.converged {
                prop_assert!(w.min_pair_distance() >= 2.0 * cfg.agent_radius - 1e-9);
            }
        }
    }
}

#[test]
fn spawn_is_seeded_and_separated() {
    let cfg = WorldConfig::default();
    for seed in 0..200 {
        let a = spawn(&cfg, seed).unwrap();
        assert_eq!(a, spawn(&cfg, seed).unwrap());
        assert!(a.min_pair_distance() > 2.0 * cfg.agent_radius);
        let h = cfg.spawn_width / 2.0;
        assert!(a.agents.iter().all(|g| g.x.abs() <= h && g.y.abs() <= h));
    }
    assert_ne!(spawn(&cfg, 1).unwrap(), spawn(&cfg, 2).unwrap());
}
