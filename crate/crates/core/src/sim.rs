//! Discrete-time 2D world of unicycle agents with a binary cone sensor.
//!
//! Agents live on an unbounded plane. Each tick integrates the unicycle
//! model with an explicit Euler step, wraps headings into `[0, 2π)` and then
//! separates any overlapping bodies by positional projection.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pairs closer than `2r - OVERLAP_SLACK` count as overlapping.
const OVERLAP_SLACK: f64 = 1e-12;
/// Collision sweeps per tick before giving up on residual overlap.
pub const MAX_COLLISION_SWEEPS: usize = 32;
/// Separation tolerance guaranteed after a converged collision pass.
pub const SEPARATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("spawn infeasible: {0}")]
    SpawnInfeasible(String),
}

fn default_n_agents() -> usize {
    10
}
fn default_spawn_width() -> f64 {
    1.2
}
fn default_dt() -> f64 {
    1.0 / 7.5
}
fn default_v_max() -> f64 {
    0.2
}
fn default_omega_max() -> f64 {
    2.0
}
fn default_agent_radius() -> f64 {
    0.1
}
fn default_sense_range() -> f64 {
    3.6
}
fn default_fov() -> f64 {
    0.4
}

/// Physical parameters of the world. Defaults are the base experiment values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    #[serde(default = "default_n_agents")]
    pub n_agents: usize,
    #[serde(default = "default_spawn_width")]
    pub spawn_width: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_agent_radius")]
    pub agent_radius: f64,
    #[serde(default = "default_sense_range")]
    pub sense_range: f64,
    /// Sensor opening angle in radians.
    #[serde(default = "default_fov")]
    pub fov: f64,
    /// Read `fov` as the half-angle of the cone instead of the full opening.
    #[serde(default)]
    pub fov_is_half_angle: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_agents: default_n_agents(),
            spawn_width: default_spawn_width(),
            dt: default_dt(),
            v_max: default_v_max(),
            omega_max: default_omega_max(),
            agent_radius: default_agent_radius(),
            sense_range: default_sense_range(),
            fov: default_fov(),
            fov_is_half_angle: false,
        }
    }
}

impl WorldConfig {
    pub fn half_fov(&self) -> f64 {
        if self.fov_is_half_angle {
            self.fov
        } else {
            0.5 * self.fov
        }
    }

    /// Checks positivity and a necessary packing bound for the spawn square.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("spawn_width", self.spawn_width),
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("agent_radius", self.agent_radius),
            ("sense_range", self.sense_range),
            ("fov", self.fov),
        ];
        let bad: Vec<String> = positive
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(name, v)| format!("{name} must be finite and > 0 (got {v})"))
            .collect();
        if !bad.is_empty() {
            return Err(SimError::InvalidConfig(bad.join("; ")));
        }
        if self.n_agents < 2 {
            return Err(SimError::InvalidConfig(format!(
                "n_agents must be >= 2 (got {})",
                self.n_agents
            )));
        }
        if self.half_fov() > std::f64::consts::PI {
            return Err(SimError::InvalidConfig(format!(
                "sensor half-angle {} exceeds pi",
                self.half_fov()
            )));
        }
        // Disjoint discs with centers in the square fit in the square grown by r.
        let r = self.agent_radius;
        let grown = self.spawn_width + 2.0 * r;
        let needed = self.n_agents as f64 * std::f64::consts::PI * r * r;
        if needed > grown * grown {
            return Err(SimError::SpawnInfeasible(format!(
                "{} discs of radius {r} cannot fit around a {} m spawn square",
                self.n_agents, self.spawn_width
            )));
        }
        Ok(())
    }
}

/// Pose and current commanded velocities of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl AgentState {
    pub fn at(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
            v: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agents: Vec<AgentState>,
    pub tick: u64,
}

/// What happened during one kinematic step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Number of commands clamped to the actuation limits.
    pub saturated: usize,
    pub collisions: CollisionReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollisionReport {
    pub sweeps: usize,
    pub converged: bool,
    /// Largest remaining penetration depth in meters.
    pub residual_overlap: f64,
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed shortest angular difference `a - b` in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Seeded uniform spawn in the `W x W` square with rejection of overlaps.
pub fn spawn(config: &WorldConfig, seed: u64) -> Result<WorldState, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * config.spawn_width;
    let min_dist = 2.0 * config.agent_radius;
    let max_attempts = 10 * config.n_agents;
    let mut agents: Vec<AgentState> = Vec::with_capacity(config.n_agents);
    for i in 0..config.n_agents {
        let mut placed = false;
        for _ in 0..max_attempts {
            let x = rng.random_range(-half..=half);
            let y = rng.random_range(-half..=half);
            let theta = rng.random_range(0.0..TAU);
            let clear = agents
                .iter()
                .all(|a| (a.x - x).hypot(a.y - y) > min_dist);
            if clear {
                agents.push(AgentState::at(x, y, theta));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::SpawnInfeasible(format!(
                "agent {i} could not be placed after {max_attempts} attempts"
            )));
        }
    }
    Ok(WorldState { agents, tick: 0 })
}

impl WorldState {
    pub fn new(agents: Vec<AgentState>) -> Self {
        Self { agents, tick: 0 }
    }

    /// Applies one unicycle step with the given `(v, ω)` commands and then
    /// resolves collisions.
    ///
    /// Commands outside the actuation limits are clamped and counted.
    pub fn step(&mut self, controls: &[(f64, f64)], config: &WorldConfig) -> StepReport {
        assert_eq!(
            controls.len(),
            self.agents.len(),
            "one control pair per agent"
        );
        let mut saturated = 0;
        for (agent, &(v, omega)) in self.agents.iter_mut().zip(controls) {
            let vc = v.clamp(-config.v_max, config.v_max);
            let wc = omega.clamp(-config.omega_max, config.omega_max);
            if vc != v || wc != omega {
                saturated += 1;
            }
            agent.v = vc;
            agent.omega = wc;
            let (s, c) = agent.theta.sin_cos();
            agent.x += vc * c * config.dt;
            agent.y += vc * s * config.dt;
            agent.theta = wrap_angle(agent.theta + wc * config.dt);
        }
        self.tick += 1;
        let collisions = self.resolve_collisions(config.agent_radius);
        debug_assert!(
            !collisions.converged || self.min_pair_distance() >= 2.0 * config.agent_radius - SEPARATION_TOLERANCE
        );
        StepReport {
            saturated,
            collisions,
        }
    }

    /// Pushes overlapping pairs apart symmetrically along their center line.
    ///
    /// Pairs are visited in ascending `(i, j)` order; sweeps repeat until a
    /// sweep finds no overlap or [`MAX_COLLISION_SWEEPS`] have run.
    pub fn resolve_collisions(&mut self, radius: f64) -> CollisionReport {
        let min_dist = 2.0 * radius;
        let n = self.agents.len();
        let mut sweeps = 0;
        while sweeps < MAX_COLLISION_SWEEPS {
            let mut any = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (self.agents[i], self.agents[j]);
                    let dx = b.x - a.x;
                    let dy = b.y - a.y;
                    let d = dx.hypot(dy);
                    if d >= min_dist - OVERLAP_SLACK {
                        continue;
                    }
                    any = true;
                    // Coincident centers separate along +x.
                    let (ux, uy) = if d > 0.0 { (dx / d, dy / d) } else { (1.0, 0.0) };
                    let push = 0.5 * (min_dist - d);
                    self.agents[i].x -= push * ux;
                    self.agents[i].y -= push * uy;
                    self.agents[j].x += push * ux;
                    self.agents[j].y += push * uy;
                }
            }
            if !any {
                return CollisionReport {
                    sweeps,
                    converged: true,
                    residual_overlap: 0.0,
                };
            }
            sweeps += 1;
        }
        let residual = (min_dist - self.min_pair_distance()).max(0.0);
        let converged = residual <= SEPARATION_TOLERANCE;
        if !converged {
            log::warn!(
                "tick {}: residual overlap {residual:.3e} m after {sweeps} collision sweeps",
                self.tick
            );
        }
        CollisionReport {
            sweeps,
            converged,
            residual_overlap: residual,
        }
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                best = best.min((b.x - a.x).hypot(b.y - a.y));
            }
        }
        best
    }

    /// Binary sensor reading of agent `i`.
    pub fn sense(&self, i: usize, config: &WorldConfig) -> bool {
        let me = &self.agents[i];
        let cone = Cone::new(me, config);
        self.agents
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && cone.hits_disc(other.x, other.y, config.agent_radius))
    }

    /// Sensor readings of every agent.
    pub fn sense_all(&self, config: &WorldConfig) -> Vec<bool> {
        (0..self.agents.len()).map(|i| self.sense(i, config)).collect()
    }
}

/// Circular sector with apex at an agent center, opening along its heading.
#[derive(Debug, Clone, Copy)]
pub struct Cone {
    pub apex: (f64, f64),
    pub heading: f64,
    pub half_angle: f64,
    pub range: f64,
}

impl Cone {
    pub fn new(agent: &AgentState, config: &WorldConfig) -> Self {
        Self {
            apex: (agent.x, agent.y),
            heading: agent.theta,
            half_angle: config.half_fov(),
            range: config.sense_range,
        }
    }

    /// Whether `(px, py)` lies inside the closed sector.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        let dx = px - self.apex.0;
        let dy = py - self.apex.1;
        let d = dx.hypot(dy);
        if d > self.range {
            return false;
        }
        if d == 0.0 {
            return true;
        }
        angle_diff(dy.atan2(dx), self.heading).abs() <= self.half_angle
    }

    /// Exact test for a disc of radius `r` centered at `(qx, qy)` meeting the
    /// closed sector.
    pub fn hits_disc(&self, qx: f64, qy: f64, r: f64) -> bool {
        let dx = qx - self.apex.0;
        let dy = qy - self.apex.1;
        let d2 = dx * dx + dy * dy;
        let reach = self.range + r;
        if d2 > reach * reach {
            return false;
        }
        if d2 <= r * r {
            return true;
        }
        let (hs, hc) = self.heading.sin_cos();
        // Components of the offset along and across the heading.
        let along = dx * hc + dy * hs;
        let across = -dx * hs + dy * hc;
        let d = d2.sqrt();
        let (sa, ca) = self.half_angle.sin_cos();
        if along >= d * ca {
            // Within the angular span: nearest sector point lies on the ray
            // toward the center, already checked against range + r.
            return true;
        }
        // Outside the span: nearest point is on the edge segment on the
        // same side as the disc.
        let side = if across >= 0.0 { 1.0 } else { -1.0 };
        let ex = ca;
        let ey = side * sa;
        let t = (along * ex + across * ey).clamp(0.0, self.range);
        let rx = along - t * ex;
        let ry = across - t * ey;
        rx * rx + ry * ry <= r * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg() -> WorldConfig {
        WorldConfig::default()
    }

    fn two(a: AgentState, b: AgentState) -> WorldState {
        WorldState::new(vec![a, b])
    }

    #[test]
    fn spawn_is_deterministic() {
        let a = spawn(&cfg(), 42).unwrap();
        let b = spawn(&cfg(), 42).unwrap();
        assert_eq!(a, b);
        let c = spawn(&cfg(), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spawn_stays_in_square_without_overlap() {
        for seed in 0..200 {
            let w = spawn(&cfg(), seed).unwrap();
            assert_eq!(w.agents.len(), 10);
            for a in &w.agents {
                assert!(a.x.abs() <= 0.6 && a.y.abs() <= 0.6);
                assert!((0.0..TAU).contains(&a.theta));
            }
            assert!(w.min_pair_distance() > 0.2);
        }
    }

    #[test]
    fn overcrowded_spawn_is_rejected() {
        let mut c = cfg();
        c.spawn_width = 2.0 * c.agent_radius * (c.n_agents as f64).sqrt() / 10.0;
        assert!(matches!(spawn(&c, 1), Err(SimError::SpawnInfeasible(_))));
    }

    #[test]
    fn placement_failure_is_reported() {
        // Passes the area bound but the rejection sampler cannot finish.
        let c = WorldConfig {
            n_agents: 4,
            spawn_width: 0.35,
            ..cfg()
        };
        assert!(c.validate().is_ok());
        let failures = (0..20)
            .filter(|&s| matches!(spawn(&c, s), Err(SimError::SpawnInfeasible(_))))
            .count();
        assert!(failures > 0);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            WorldConfig { n_agents: 1, ..cfg() },
            WorldConfig { dt: 0.0, ..cfg() },
            WorldConfig { v_max: -1.0, ..cfg() },
            WorldConfig { fov: f64::NAN, ..cfg() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn straight_step() {
        let c = cfg();
        let mut w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(5.0, 5.0, 0.0));
        w.step(&[(0.2, 0.0), (0.0, 0.0)], &c);
        let a = w.agents[0];
        assert!((a.x - 0.2 / 7.5).abs() < 1e-15);
        assert_eq!(a.y, 0.0);
        assert_eq!(a.theta, 0.0);
        assert!((a.x - 0.026667).abs() < 1e-6);
        assert_eq!(w.tick, 1);
    }

    #[test]
    fn pure_rotation_step() {
        let c = cfg();
        let mut w = two(AgentState::at(1.0, 2.0, FRAC_PI_2), AgentState::at(5.0, 5.0, 0.0));
        w.step(&[(0.0, 2.0), (0.0, 0.0)], &c);
        let a = w.agents[0];
        assert_eq!((a.x, a.y), (1.0, 2.0));
        assert!((a.theta - (FRAC_PI_2 + 2.0 / 7.5)).abs() < 1e-15);
    }

    #[test]
    fn saturation_is_clamped_and_counted() {
        let c = cfg();
        let mut w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(5.0, 5.0, 0.0));
        let r = w.step(&[(1.0, -9.0), (0.1, 0.0)], &c);
        assert_eq!(r.saturated, 1);
        assert_eq!(w.agents[0].v, 0.2);
        assert_eq!(w.agents[0].omega, -2.0);
    }

    #[test]
    fn heading_wraps() {
        let c = cfg();
        let mut w = two(AgentState::at(0.0, 0.0, 0.05), AgentState::at(5.0, 5.0, TAU - 0.05));
        w.step(&[(0.0, -2.0), (0.0, 2.0)], &c);
        for a in &w.agents {
            assert!((0.0..TAU).contains(&a.theta));
        }
        assert!((w.agents[0].theta - (TAU + 0.05 - 2.0 / 7.5)).abs() < 1e-12);
        assert!((w.agents[1].theta - (2.0 / 7.5 - 0.05)).abs() < 1e-12);
        assert_eq!(wrap_angle(-1e-300), 0.0);
    }

    #[test]
    fn discrete_circle_closed_form() {
        // Iterating the Euler recurrence from the origin with constant (v, ω)
        // visits the vertices of a regular polygon inscribed in the circle
        // centered at vΔt / (1 - e^{iωΔt}).
        let c = cfg();
        let (v, w) = (0.2, 2.0);
        let step = v * c.dt;
        let alpha = w * c.dt;
        let denom_re = 1.0 - alpha.cos();
        let denom_im = -alpha.sin();
        let norm = denom_re * denom_re + denom_im * denom_im;
        let cx = step * denom_re / norm;
        let cy = -step * denom_im / norm;
        let radius = step / (2.0 * (alpha / 2.0).sin());
        assert!((cx.hypot(cy) - radius).abs() < 1e-15);
        assert!((radius - v / w).abs() / (v / w) < 0.02);

        let mut world = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(100.0, 100.0, 0.0));
        let mut worst: f64 = 0.0;
        for k in 1..=100u32 {
            world.step(&[(v, w), (0.0, 0.0)], &c);
            let a = world.agents[0];
            worst = worst.max(((a.x - cx).hypot(a.y - cy) - radius).abs());
            // closed form of the k-th vertex
            let ka = k as f64 * alpha;
            let ex = cx - (cx * ka.cos() - cy * ka.sin());
            let ey = cy - (cx * ka.sin() + cy * ka.cos());
            assert!((a.x - ex).abs() < 1e-9 && (a.y - ey).abs() < 1e-9, "k={k}");
        }
        assert!(worst < 1e-6, "max deviation {worst}");
    }

    #[test]
    fn symmetric_separation() {
        let mut w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(0.1, 0.0, 1.0));
        let before_heading = (w.agents[0].theta, w.agents[1].theta);
        let r = w.resolve_collisions(0.1);
        assert!(r.converged);
        assert!((w.agents[0].x + 0.05).abs() < 1e-15);
        assert!((w.agents[1].x - 0.15).abs() < 1e-15);
        assert_eq!(w.agents[0].y, 0.0);
        assert_eq!((w.agents[0].theta, w.agents[1].theta), before_heading);
    }

    #[test]
    fn no_overlap_is_identity() {
        let mut w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(0.5, 0.0, 1.0));
        let before = w.clone();
        let r = w.resolve_collisions(0.1);
        assert_eq!(w, before);
        assert_eq!(r.sweeps, 0);
    }

    #[test]
    fn colinear_triple_separates() {
        let mut w = WorldState::new(vec![
            AgentState::at(0.0, 0.0, 0.0),
            AgentState::at(0.1, 0.0, 0.0),
            AgentState::at(0.2, 0.0, 0.0),
        ]);
        let r = w.resolve_collisions(0.1);
        assert!(r.converged);
        assert!(w.min_pair_distance() >= 0.2 - 1e-9);
    }

    #[test]
    fn coincident_agents_separate() {
        let mut w = two(AgentState::at(0.3, 0.3, 0.0), AgentState::at(0.3, 0.3, 0.0));
        w.resolve_collisions(0.1);
        assert!((w.min_pair_distance() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sensor_sees_ahead_not_behind() {
        let c = cfg();
        let w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(1.0, 0.0, 0.0));
        assert!(w.sense(0, &c));
        assert!(!w.sense(1, &c));
        let far = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(3.65, 0.0, 0.0));
        assert!(far.sense(0, &c));
        let too_far = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(3.71, 0.0, 0.0));
        assert!(!too_far.sense(0, &c));
    }

    #[test]
    fn sensor_catches_disc_straddling_cone_edge() {
        let c = cfg();
        // Center at 1 m, angle 0.25 rad off the heading: outside the 0.2 rad
        // half-angle, but the disc reaches back across the edge.
        let (px, py) = (0.25f64.cos(), 0.25f64.sin());
        let w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(px, py, 0.0));
        assert!(!Cone::new(&w.agents[0], &c).contains_point(px, py));
        assert!(w.sense(0, &c));
        // Same angle but further out sideways: miss.
        let (qx, qy) = (0.6f64.cos(), 0.6f64.sin());
        let w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(qx, qy, 0.0));
        assert!(!w.sense(0, &c));
    }

    #[test]
    fn half_angle_flag() {
        let mut c = cfg();
        let (px, py) = (2.0 * 0.35f64.cos(), 2.0 * 0.35f64.sin());
        let w = two(AgentState::at(0.0, 0.0, 0.0), AgentState::at(px, py, 0.0));
        assert!(!w.sense(0, &c));
        c.fov_is_half_angle = true;
        assert!(w.sense(0, &c));
    }

    #[test]
    fn angle_diff_range() {
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_diff(PI, 0.0) - PI).abs() < 1e-12);
        assert!((angle_diff(0.0, PI) - PI).abs() < 1e-12);
    }
}
