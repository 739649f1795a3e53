//! Simulation harness: configuration, fitness evaluation, optimizer runs,
//! replays and robustness sweeps.

pub mod config;
pub mod eval;
pub mod experiment;
pub mod replay;
pub mod sweep;

pub use config::{CmaConfig, ConfigError, ExperimentConfig, Optimizer, SimConfig};
pub use eval::{evaluate_fitness, evaluate_from_world, scripted_mill, EvalError, Evaluator, Simulation, TickRecord};
pub use experiment::{load_artifact, run_experiment, BestRecord, EpochStats, RunControl, RunError, RunOutcome};
pub use replay::{render_svg, simulate_trace, write_replay, FrameRecord, Replay};
pub use sweep::{robustness_sweep, write_sweep, SweepReport, SweepSummary};
