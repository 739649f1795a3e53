//! Fitness of a controller: one seeded simulation scored by circliness.

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, SimConfig};
use crate::controllers::{ControllerError, ControllerInstance, ControllerSpec};
use crate::metrics::{CirclinessTracker, MetricSample, SwarmSnapshot};
use crate::sim::{self, AgentState, SimError, StepReport, WorldState};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("circliness undefined after {ticks} ticks with window {window}")]
    Undefined { ticks: u64, window: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// What one tick produced, for tracing and rendering.
#[derive(Debug, Clone)]
pub struct TickRecord {
    /// Tick index of the state the sensors were read on.
    pub tick: u64,
    /// Sensor bits read on that state.
    pub sensors: Vec<bool>,
    pub step: StepReport,
    /// Metrics of the state after the step.
    pub metrics: MetricSample,
}

/// A running swarm: world, per-agent controllers and the metric tracker.
///
/// Each [`Simulation::tick`] reads every sensor on the current state,
/// applies the commands computed from the previous tick's readings, steps
/// the world and then feeds the fresh readings to the controllers. On the
/// first tick agents hold still.
pub struct Simulation {
    config: SimConfig,
    world: WorldState,
    controllers: Vec<ControllerInstance>,
    commands: Vec<(f64, f64)>,
    tracker: CirclinessTracker,
    last_lambda: Option<f64>,
}

impl Simulation {
    pub fn new(spec: &ControllerSpec, config: &SimConfig, spawn_seed: u64) -> Result<Self, EvalError> {
        config.validate()?;
        let world = sim::spawn(&config.world, spawn_seed)?;
        Self::from_world(spec, config, world)
    }

    pub fn from_world(spec: &ControllerSpec, config: &SimConfig, world: WorldState) -> Result<Self, EvalError> {
        config.validate()?;
        let n = world.agents.len();
        Ok(Self {
            config: config.clone(),
            controllers: spec.instantiate_swarm(n)?,
            commands: vec![(0.0, 0.0); n],
            tracker: CirclinessTracker::new(config.window),
            last_lambda: None,
            world,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn sense(&self) -> Vec<bool> {
        self.world.sense_all(&self.config.world)
    }

    pub fn tick(&mut self) -> Result<TickRecord, EvalError> {
        let tick = self.world.tick;
        let sensors = self.sense();
        let step = self.world.step(&self.commands, &self.config.world);
        let metrics = self.tracker.push(&SwarmSnapshot::from(&self.world));
        self.last_lambda = metrics.lambda;
        for ((ctrl, cmd), &h) in self.controllers.iter_mut().zip(&mut self.commands).zip(&sensors) {
            *cmd = ctrl.next(h, &self.config.world)?;
        }
        Ok(TickRecord {
            tick,
            sensors,
            step,
            metrics,
        })
    }

    /// Runs the remaining ticks up to the horizon and returns λ(T).
    pub fn run_to_end(&mut self) -> Result<f64, EvalError> {
        while self.world.tick < self.config.horizon {
            self.tick()?;
        }
        self.lambda()
    }

    pub fn lambda(&self) -> Result<f64, EvalError> {
        self.last_lambda.ok_or(EvalError::Undefined {
            ticks: self.world.tick,
            window: self.config.window,
        })
    }
}

/// λ(T) of `spec` from the spawn drawn with `spawn_seed`.
pub fn evaluate_fitness(spec: &ControllerSpec, config: &SimConfig, spawn_seed: u64) -> Result<f64, EvalError> {
    Simulation::new(spec, config, spawn_seed)?.run_to_end()
}

/// λ(T) of `spec` from an explicit initial world.
pub fn evaluate_from_world(spec: &ControllerSpec, config: &SimConfig, world: WorldState) -> Result<f64, EvalError> {
    Simulation::from_world(spec, config, world)?.run_to_end()
}

/// `n` agents evenly spaced on the circle that the discrete unicycle update
/// with constant `(v, ω)` keeps invariant, headings set so that every agent
/// orbits the origin.
pub fn scripted_mill(n: usize, v: f64, omega: f64, dt: f64) -> WorldState {
    let alpha = omega * dt;
    let radius = v * dt / (2.0 * (alpha / 2.0).sin()).abs();
    let agents = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            // Chord direction leads the tangent by α/2.
            let heading = a + omega.signum() * (std::f64::consts::FRAC_PI_2 + alpha.abs() / 2.0);
            AgentState::at(radius * a.cos(), radius * a.sin(), heading)
        })
        .collect();
    WorldState::new(agents)
}

/// Order-preserving parallel evaluator with a bounded worker pool.
pub struct Evaluator {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Evaluator {
    pub fn new(workers: usize) -> Result<Self, EvalError> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("eval-{i}"))
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates every spec on the same spawn seed. Failures stay in their slot.
    pub fn evaluate_population(
        &self,
        specs: &[ControllerSpec],
        config: &SimConfig,
        spawn_seed: u64,
    ) -> Vec<Result<f64, EvalError>> {
        self.pool.install(|| {
            specs
                .par_iter()
                .map(|spec| evaluate_fitness(spec, config, spawn_seed))
                .collect()
        })
    }

    /// Evaluates one spec across many spawn seeds.
    pub fn evaluate_seeds(
        &self,
        spec: &ControllerSpec,
        config: &SimConfig,
        seeds: &[u64],
    ) -> Vec<Result<f64, EvalError>> {
        self.pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| evaluate_fitness(spec, config, seed))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::SymbolicParams;
    use crate::snn::Network;

    fn still() -> ControllerSpec {
        ControllerSpec::Symbolic(SymbolicParams {
            v_a: 0.0,
            v_b: 0.0,
            omega_a: 0.0,
            omega_b: 0.0,
        })
    }

    fn constant(v: f64, omega: f64) -> ControllerSpec {
        ControllerSpec::Symbolic(SymbolicParams {
            v_a: v,
            v_b: v,
            omega_a: omega,
            omega_b: omega,
        })
    }

    #[test]
    fn scripted_mill_scores_near_one() {
        let cfg = SimConfig::default();
        let world = scripted_mill(10, 0.2, 0.01, cfg.world.dt);
        let l = evaluate_from_world(&constant(0.2, 0.01), &cfg, world).unwrap();
        assert!(l >= 0.999, "λ = {l}");
    }

    #[test]
    fn frozen_swarm_is_finite_and_low() {
        let l = evaluate_fitness(&still(), &SimConfig::default(), 3).unwrap();
        assert!((0.0..=1.0).contains(&l));
        assert!(l <= 0.3, "λ = {l}");
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let spec = ControllerSpec::Symbolic(SymbolicParams {
            v_a: 0.1,
            v_b: 0.2,
            omega_a: -1.0,
            omega_b: 1.4,
        });
        let cfg = SimConfig {
            horizon: 200,
            window: 50,
            ..Default::default()
        };
        let a = evaluate_fitness(&spec, &cfg, 11).unwrap();
        let b = evaluate_fitness(&spec, &cfg, 11).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn first_tick_holds_still() {
        let cfg = SimConfig::default();
        let mut s = Simulation::new(&constant(0.2, 1.0), &cfg, 1).unwrap();
        let before = s.world().agents.clone();
        s.tick().unwrap();
        let after = &s.world().agents;
        for (a, b) in before.iter().zip(after) {
            assert_eq!((a.x, a.y, a.theta), (b.x, b.y, b.theta));
        }
        s.tick().unwrap();
        assert!(s.world().agents.iter().zip(&before).all(|(a, b)| a.x != b.x || a.y != b.y));
    }

    #[test]
    fn invalid_network_fails_in_its_slot() {
        let mut bad = Network::minimal();
        bad.neurons[0].threshold = 500;
        let specs = vec![still(), ControllerSpec::Snn(bad), still()];
        let cfg = SimConfig {
            horizon: 30,
            window: 10,
            ..Default::default()
        };
        let ev = Evaluator::new(2).unwrap();
        let out = ev.evaluate_population(&specs, &cfg, 0);
        assert!(out[0].is_ok() && out[2].is_ok());
        assert!(matches!(out[1], Err(EvalError::Controller(_))));
    }
}
