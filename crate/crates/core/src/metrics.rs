//! Fatness, tangentness and the windowed circliness score.

use std::collections::VecDeque;

use crate::sim::WorldState;

/// Below this centroid spread the swarm counts as a single point.
const DEGENERATE_RADIUS: f64 = 1e-12;

/// Positions and headings of the swarm at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmSnapshot {
    pub positions: Vec<(f64, f64)>,
    pub headings: Vec<f64>,
}

impl SwarmSnapshot {
    pub fn new(positions: Vec<(f64, f64)>, headings: Vec<f64>) -> Self {
        assert_eq!(positions.len(), headings.len());
        assert!(positions.len() >= 2, "need at least two agents");
        Self {
            positions,
            headings,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.positions.len() as f64;
        let (sx, sy) = self
            .positions
            .iter()
            .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
        (sx / n, sy / n)
    }
}

impl From<&WorldState> for SwarmSnapshot {
    fn from(world: &WorldState) -> Self {
        Self::new(
            world.agents.iter().map(|a| (a.x, a.y)).collect(),
            world.agents.iter().map(|a| a.theta).collect(),
        )
    }
}

/// `1 - r_min² / r_max²` about the centroid; 0 on a perfect circle.
pub fn fatness(snap: &SwarmSnapshot) -> f64 {
    let (mx, my) = snap.centroid();
    let mut r_min = f64::INFINITY;
    let mut r_max: f64 = 0.0;
    for &(x, y) in &snap.positions {
        let r = (x - mx).hypot(y - my);
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    if r_max < DEGENERATE_RADIUS {
        return 1.0;
    }
    (1.0 - (r_min * r_min) / (r_max * r_max)).clamp(0.0, 1.0)
}

/// Mean `|cos(θ_i − ∠(p_i − μ))|`; 0 when every heading is tangent.
pub fn tangentness(snap: &SwarmSnapshot) -> f64 {
    let (mx, my) = snap.centroid();
    let sum: f64 = snap
        .positions
        .iter()
        .zip(&snap.headings)
        .map(|(&(x, y), &theta)| {
            // atan2(0, 0) == 0 for an agent sitting on the centroid.
            let bearing = (y - my).atan2(x - mx);
            (theta - bearing).cos().abs()
        })
        .sum();
    (sum / snap.len() as f64).clamp(0.0, 1.0)
}

/// Rolling-window accumulator for fatness and tangentness.
#[derive(Debug, Clone)]
pub struct CirclinessTracker {
    window: usize,
    phi: VecDeque<f64>,
    tau: VecDeque<f64>,
    phi_sum: f64,
    tau_sum: f64,
}

/// One tick of metric output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub phi: f64,
    pub tau: f64,
    pub lambda: Option<f64>,
}

impl CirclinessTracker {
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "window must be at least one tick");
        Self {
            window,
            phi: VecDeque::with_capacity(window),
            tau: VecDeque::with_capacity(window),
            phi_sum: 0.0,
            tau_sum: 0.0,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.phi.iter().copied()
    }

    pub fn tau_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.tau.iter().copied()
    }

    /// Pushes a pre-computed `(φ, τ)` pair and returns λ once the window is full.
    pub fn push_values(&mut self, phi: f64, tau: f64) -> Option<f64> {
        if self.phi.len() == self.window {
            self.phi_sum -= self.phi.pop_front().unwrap_or(0.0);
            self.tau_sum -= self.tau.pop_front().unwrap_or(0.0);
        }
        self.phi.push_back(phi);
        self.tau.push_back(tau);
        self.phi_sum += phi;
        self.tau_sum += tau;
        self.circliness()
    }

    pub fn push(&mut self, snap: &SwarmSnapshot) -> MetricSample {
        let phi = fatness(snap);
        let tau = tangentness(snap);
        let lambda = self.push_values(phi, tau);
        MetricSample { phi, tau, lambda }
    }

    pub fn mean_phi(&self) -> Option<f64> {
        (!self.phi.is_empty()).then(|| (self.phi_sum / self.phi.len() as f64).clamp(0.0, 1.0))
    }

    pub fn mean_tau(&self) -> Option<f64> {
        (!self.tau.is_empty()).then(|| (self.tau_sum / self.tau.len() as f64).clamp(0.0, 1.0))
    }

    /// `1 − max(φ̄, τ̄)`, defined only once `window` samples are held.
    pub fn circliness(&self) -> Option<f64> {
        if self.phi.len() < self.window {
            return None;
        }
        let phi = self.mean_phi()?;
        let tau = self.mean_tau()?;
        Some((1.0 - phi.max(tau)).clamp(0.0, 1.0))
    }
}
