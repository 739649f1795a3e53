use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmaes::DEFAULT_COND_LIMIT;
use crate::evolution::EvolutionConfig;
use crate::sim::{SimError, WorldConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    World(#[from] SimError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Eons,
    Cmaes,
}

fn d_sigma0() -> f64 {
    0.2
}
fn d_initial_mean() -> f64 {
    0.5
}
fn d_cond_limit() -> f64 {
    DEFAULT_COND_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaConfig {
    #[serde(default = "d_sigma0")]
    pub sigma0: f64,
    /// Every component of the starting mean.
    #[serde(default = "d_initial_mean")]
    pub initial_mean: f64,
    #[serde(default = "d_cond_limit")]
    pub cond_limit: f64,
}

impl Default for CmaConfig {
    fn default() -> Self {
        Self {
            sigma0: d_sigma0(),
            initial_mean: d_initial_mean(),
            cond_limit: d_cond_limit(),
        }
    }
}

fn d_horizon() -> u64 {
    1000
}
fn d_window() -> usize {
    450
}
fn d_population() -> usize {
    100
}
fn d_epochs() -> u64 {
    1000
}
fn d_workers() -> usize {
    24
}
fn d_sweep_size() -> usize {
    100
}
fn d_optimizer() -> Optimizer {
    Optimizer::Eons
}
fn d_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn d_frame_every() -> u64 {
    50
}

/// Everything one experiment needs. Defaults reproduce the base setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub world: WorldConfig,
    /// Ticks per simulation (T).
    #[serde(default = "d_horizon")]
    pub horizon: u64,
    /// Rolling window for the circliness averages.
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "d_population")]
    pub population_size: usize,
    #[serde(default = "d_epochs")]
    pub n_epochs: u64,
    #[serde(default = "d_optimizer")]
    pub optimizer: Optimizer,
    /// Spawn seed used for every training evaluation.
    #[serde(default)]
    pub train_seed: u64,
    /// Optimizer RNG seeds; one run per seed.
    #[serde(default)]
    pub optimizer_seeds: Vec<u64>,
    /// Extra spawn seeds for robustness sweeps.
    #[serde(default)]
    pub eval_seeds: Vec<u64>,
    #[serde(default = "d_sweep_size")]
    pub sweep_size: usize,
    #[serde(default = "d_workers")]
    pub workers: usize,
    #[serde(default = "d_output_dir")]
    pub output_dir: PathBuf,
    /// Stop a run once the best raw fitness reaches this value.
    #[serde(default)]
    pub stop_at_fitness: Option<f64>,
    /// Ticks between rendered replay frames.
    #[serde(default = "d_frame_every")]
    pub frame_every: u64,
    #[serde(default)]
    pub eons: EvolutionConfig,
    #[serde(default)]
    pub cmaes: CmaConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

/// The subset of the configuration a single simulation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub world: WorldConfig,
    pub horizon: u64,
    pub window: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        ExperimentConfig::default().sim()
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.world.validate()?;
        if self.window == 0 {
            return Err(ConfigError::Invalid("window must be >= 1".into()));
        }
        if self.window as u64 > self.horizon {
            return Err(ConfigError::Invalid(format!(
                "window {} exceeds horizon {}",
                self.window, self.horizon
            )));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            world: self.world.clone(),
            horizon: self.horizon,
            window: self.window,
        }
    }

    /// Evolution settings with the shared population size applied.
    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.population_size,
            ..self.eons.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim().validate()?;
        if self.population_size < 2 {
            return Err(ConfigError::Invalid("population_size must be >= 2".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        if self.frame_every == 0 {
            return Err(ConfigError::Invalid("frame_every must be >= 1".into()));
        }
        self.evolution().validate().map_err(ConfigError::Invalid)?;
        let c = &self.cmaes;
        if !(c.sigma0 > 0.0 && c.sigma0.is_finite()) {
            return Err(ConfigError::Invalid("cmaes.sigma0 must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&c.initial_mean) {
            return Err(ConfigError::Invalid("cmaes.initial_mean must lie in [0, 1]".into()));
        }
        if !(c.cond_limit > 1.0) {
            return Err(ConfigError::Invalid("cmaes.cond_limit must be > 1".into()));
        }
        Ok(())
    }

    /// Spawn seeds for a robustness sweep; the training seed comes first.
    pub fn sweep_seeds(&self) -> Vec<u64> {
        let mut seeds = vec![self.train_seed];
        for &s in &self.eval_seeds {
            if seeds.len() == self.sweep_size {
                break;
            }
            if !seeds.contains(&s) {
                seeds.push(s);
            }
        }
        let mut next = self.train_seed;
        while seeds.len() < self.sweep_size {
            next = next.wrapping_add(1);
            if !seeds.contains(&next) {
                seeds.push(next);
            }
        }
        seeds.truncate(self.sweep_size.max(1));
        seeds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_base_parameters() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.world.n_agents, 10);
        assert_eq!(c.world.spawn_width, 1.2);
        assert_eq!(c.horizon, 1000);
        assert_eq!(c.window, 450);
        assert_eq!(c.world.dt, 1.0 / 7.5);
        assert_eq!(c.world.v_max, 0.2);
        assert_eq!(c.world.omega_max, 2.0);
        assert_eq!(c.world.sense_range, 3.6);
        assert_eq!(c.world.fov, 0.4);
        assert_eq!(c.population_size, 100);
        assert_eq!(c.n_epochs, 1000);
        let e = c.evolution();
        assert_eq!((e.starting_nodes, e.starting_edges, e.num_best, e.num_mutations), (10, 20, 4, 3));
        assert_eq!(c.cmaes.sigma0, 0.2);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn window_longer_than_horizon_is_rejected() {
        let err = ExperimentConfig::from_toml("horizon = 10\nwindow = 20\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[eons]\npopulation_size = 5\n").is_err());
    }

    #[test]
    fn sweep_seeds_start_with_training_seed() {
        let c = ExperimentConfig {
            train_seed: 7,
            eval_seeds: vec![7, 3, 3, 9],
            sweep_size: 6,
            ..Default::default()
        };
        assert_eq!(c.sweep_seeds(), vec![7, 3, 9, 8, 10, 11]);
        let d = ExperimentConfig::default().sweep_seeds();
        assert_eq!(d.len(), 100);
        assert_eq!(d[0], 0);
    }
}
