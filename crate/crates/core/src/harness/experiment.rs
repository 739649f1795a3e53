//! Optimizer driver: epochs, stats CSV, best-so-far artifacts and resumable
//! checkpoints.
//!
//! Output directory layout:
//!
//! ```text
//! config.toml        effective configuration
//! stats.csv          one row per completed epoch
//! best.json          best-so-far controller (network or symbolic params)
//! epochs/NNNNN.json  best controller of each epoch
//! checkpoint.json    optimizer state after the last completed epoch
//! ```
//!
//! Each epoch draws its randomness from a ChaCha stream keyed by
//! `(optimizer seed, epoch)`, so a resumed run replays the same rows as an
//! uninterrupted one.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ExperimentConfig, Optimizer};
use super::eval::{EvalError, Evaluator};
use crate::cmaes::{self, CmaError, CmaState, Matrix, Vector};
use crate::controllers::{ControllerError, ControllerSpec, SymbolicParams};
use crate::evolution::{self, ScoredGenome};
use crate::snn::Network;

pub const STATS_FILE: &str = "stats.csv";
pub const BEST_FILE: &str = "best.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EPOCH_DIR: &str = "epochs";

/// Columns holding wall-clock measurements; everything else is deterministic.
pub const TIMING_COLUMNS: [&str; 2] = ["wall_seconds", "cumulative_seconds"];

const BASE_COLUMNS: [&str; 11] = [
    "epoch",
    "best_raw",
    "best_penalized",
    "best_so_far",
    "mean",
    "min",
    "max",
    "neuron_count",
    "synapse_count",
    "wall_seconds",
    "cumulative_seconds",
];
const PARAM_COLUMNS: [&str; 4] = ["v_a", "v_b", "omega_a", "omega_b"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("checkpoint {path} is unreadable: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Cma(#[from] CmaError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One row of the per-epoch statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: u64,
    pub best_raw: Option<f64>,
    pub best_penalized: f64,
    pub best_so_far: f64,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub neuron_count: Option<usize>,
    pub synapse_count: Option<usize>,
    pub wall_seconds: f64,
    pub cumulative_seconds: f64,
    pub params: Option<SymbolicParams>,
}

impl EpochStats {
    fn record(&self, with_params: bool) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut row = vec![
            self.epoch.to_string(),
            opt(self.best_raw),
            self.best_penalized.to_string(),
            self.best_so_far.to_string(),
            opt(self.mean),
            opt(self.min),
            opt(self.max),
            opt(self.neuron_count),
            opt(self.synapse_count),
            format!("{:.6}", self.wall_seconds),
            format!("{:.6}", self.cumulative_seconds),
        ];
        if with_params {
            let p = self.params;
            row.push(opt(p.map(|p| p.v_a)));
            row.push(opt(p.map(|p| p.v_b)));
            row.push(opt(p.map(|p| p.omega_a)));
            row.push(opt(p.map(|p| p.omega_b)));
        }
        row
    }
}

pub fn stats_header(optimizer: Optimizer) -> Vec<&'static str> {
    let mut h = BASE_COLUMNS.to_vec();
    if optimizer == Optimizer::Cmaes {
        h.extend(PARAM_COLUMNS);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub epoch: u64,
    pub raw: f64,
    pub penalized: f64,
    /// Controller JSON document.
    pub artifact: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum OptimizerState {
    Eons { population: Vec<Network> },
    Cmaes { state: Box<CmaState> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    optimizer_seed: u64,
    next_epoch: u64,
    cumulative_seconds: f64,
    best: Option<BestRecord>,
    finished: Option<String>,
    state: OptimizerState,
}

/// Limits for a single call; used to interrupt and resume runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunControl {
    /// Continue from `checkpoint.json` when present.
    pub resume: bool,
    /// Stop after this many epochs in this call.
    pub max_epochs_this_call: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub epochs_completed: u64,
    pub best: Option<BestRecord>,
    /// Why the run ended before `n_epochs`, if it did.
    pub finished: Option<String>,
    pub rows: Vec<EpochStats>,
}

impl RunOutcome {
    pub fn best_spec(&self) -> Option<ControllerSpec> {
        self.best
            .as_ref()
            .and_then(|b| ControllerSpec::from_json(&b.artifact).ok())
    }

    pub fn best_raw(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.raw)
    }
}

fn epoch_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch + 1);
    rng
}

fn write_atomic(path: &Path, text: &str) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Truncates `stats.csv` to the header plus `rows` data rows, creating it
/// when missing.
fn prepare_stats(path: &Path, header: &[&str], rows: u64) -> Result<(), RunError> {
    let header_line = header.join(",");
    let mut kept = vec![header_line.clone()];
    if rows > 0 && path.exists() {
        let f = File::open(path).map_err(io_err(path))?;
        let lines: Vec<String> = BufReader::new(f)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(io_err(path))?;
        if lines.first() != Some(&header_line) {
            return Err(RunError::Checkpoint {
                path: path.to_path_buf(),
                reason: "stats header does not match the optimizer".into(),
            });
        }
        kept.extend(lines.into_iter().skip(1).take(rows as usize));
    }
    let mut text = kept.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn append_row(path: &Path, row: &[String]) -> Result<(), RunError> {
    let f = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    w.write_record(row)
        .and_then(|_| w.flush().map_err(csv::Error::from))
        .map_err(|e| RunError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })
}

fn summarize(raws: &[Option<f64>]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ok: Vec<f64> = raws.iter().flatten().copied().collect();
    if ok.is_empty() {
        return (None, None, None);
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let min = ok.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (Some(mean), Some(min), Some(max))
}

/// Runs (or resumes) one optimizer run into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    optimizer_seed: u64,
    out_dir: &Path,
    control: RunControl,
) -> Result<RunOutcome, RunError> {
    config.validate()?;
    fs::create_dir_all(out_dir.join(EPOCH_DIR)).map_err(io_err(out_dir))?;
    write_atomic(&out_dir.join("config.toml"), &config.to_toml())?;

    let ckpt_path = out_dir.join(CHECKPOINT_FILE);
    let mut ckpt = if control.resume && ckpt_path.exists() {
        let text = fs::read_to_string(&ckpt_path).map_err(io_err(&ckpt_path))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| RunError::Checkpoint {
            path: ckpt_path.clone(),
            reason: e.to_string(),
        })?;
        if c.optimizer_seed != optimizer_seed {
            return Err(RunError::Checkpoint {
                path: ckpt_path,
                reason: format!("checkpoint seed {} != requested {optimizer_seed}", c.optimizer_seed),
            });
        }
        c
    } else {
        fresh_checkpoint(config, optimizer_seed)
    };

    let stats_path = out_dir.join(STATS_FILE);
    let header = stats_header(config.optimizer);
    prepare_stats(&stats_path, &header, ckpt.next_epoch)?;

    let evaluator = Evaluator::new(config.workers)?;
    let sim = config.sim();
    let mut rows = Vec::new();
    let mut done_this_call = 0;

    while ckpt.finished.is_none() && ckpt.next_epoch < config.n_epochs {
        if control.max_epochs_this_call.is_some_and(|m| done_this_call >= m) {
            break;
        }
        let epoch = ckpt.next_epoch;
        let started = Instant::now();
        let mut rng = epoch_rng(optimizer_seed, epoch);

        let (mut row, epoch_best) = match &mut ckpt.state {
            OptimizerState::Eons { population } => {
                let specs: Vec<ControllerSpec> = population.iter().cloned().map(ControllerSpec::Snn).collect();
                let results = evaluator.evaluate_population(&specs, &sim, config.train_seed);
                let alpha = config.eons.size_penalty_alpha;
                let scored: Vec<ScoredGenome> = population
                    .drain(..)
                    .zip(results)
                    .map(|(net, r)| {
                        if let Err(e) = &r {
                            log::warn!("epoch {epoch}: evaluation failed: {e}");
                        }
                        ScoredGenome::new(net, r.ok(), alpha)
                    })
                    .collect();
                let order = evolution::ranking(&scored);
                let top = &scored[order[0]];
                let raws: Vec<Option<f64>> = scored.iter().map(|g| g.raw_fitness).collect();
                let (mean, min, max) = summarize(&raws);
                let best = BestRecord {
                    epoch,
                    raw: top.raw_fitness.unwrap_or(f64::NEG_INFINITY),
                    penalized: top.penalized_fitness,
                    artifact: top.network.to_json(),
                };
                let row = EpochStats {
                    epoch,
                    best_raw: top.raw_fitness,
                    best_penalized: top.penalized_fitness,
                    best_so_far: f64::NAN,
                    mean,
                    min,
                    max,
                    neuron_count: Some(top.network.neuron_count()),
                    synapse_count: Some(top.network.synapse_count()),
                    wall_seconds: 0.0,
                    cumulative_seconds: 0.0,
                    params: None,
                };
                let evo = config.evolution();
                *population = evolution::next_generation(&scored, &evo, &mut rng)
                    .into_iter()
                    .map(|o| o.network)
                    .collect();
                (row, best)
            }
            OptimizerState::Cmaes { state } => {
                let candidates = state.ask(&mut rng)?;
                let params: Vec<SymbolicParams> = candidates
                    .iter()
                    .map(|c| cmaes::discretize(&c.clipped, &config.world))
                    .collect();
                let specs: Vec<ControllerSpec> = params.iter().copied().map(ControllerSpec::Symbolic).collect();
                let results = evaluator.evaluate_population(&specs, &sim, config.train_seed);
                let raws: Vec<Option<f64>> = results
                    .into_iter()
                    .map(|r| match r {
                        Ok(v) => Some(v),
                        Err(e) => {
                            log::warn!("epoch {epoch}: evaluation failed: {e}");
                            None
                        }
                    })
                    .collect();
                let fitness: Vec<f64> = raws.iter().map(|r| r.unwrap_or(0.0)).collect();
                let top = (0..fitness.len())
                    .max_by(|&i, &j| fitness[i].total_cmp(&fitness[j]).then(j.cmp(&i)))
                    .expect("non-empty population");
                let (mean, min, max) = summarize(&raws);
                state.tell(&candidates, &fitness)?;
                if let Some(t) = state.terminated {
                    ckpt.finished = Some(format!("cma-es terminated after epoch {epoch}: {t:?}"));
                }
                let best = BestRecord {
                    epoch,
                    raw: fitness[top],
                    penalized: fitness[top],
                    artifact: params[top].to_json(),
                };
                let row = EpochStats {
                    epoch,
                    best_raw: raws[top],
                    best_penalized: fitness[top],
                    best_so_far: f64::NAN,
                    mean,
                    min,
                    max,
                    neuron_count: None,
                    synapse_count: None,
                    wall_seconds: 0.0,
                    cumulative_seconds: 0.0,
                    params: Some(params[top]),
                };
                (row, best)
            }
        };

        if ckpt.best.as_ref().is_none_or(|b| epoch_best.penalized > b.penalized) {
            write_atomic(&out_dir.join(BEST_FILE), &epoch_best.artifact)?;
            ckpt.best = Some(epoch_best.clone());
        }
        let best = ckpt.best.as_ref().expect("best recorded");
        row.best_so_far = best.penalized;
        if config.stop_at_fitness.is_some_and(|t| best.raw >= t) && ckpt.finished.is_none() {
            ckpt.finished = Some(format!("target fitness reached at epoch {epoch}"));
        }
        write_atomic(
            &out_dir.join(EPOCH_DIR).join(format!("{epoch:05}.json")),
            &epoch_best.artifact,
        )?;

        let wall = started.elapsed().as_secs_f64();
        ckpt.cumulative_seconds += wall;
        row.wall_seconds = wall;
        row.cumulative_seconds = ckpt.cumulative_seconds;
        append_row(&stats_path, &row.record(config.optimizer == Optimizer::Cmaes))?;
        ckpt.next_epoch = epoch + 1;
        let text = serde_json::to_string(&ckpt).map_err(|e| RunError::Checkpoint {
            path: ckpt_path.clone(),
            reason: e.to_string(),
        })?;
        write_atomic(&ckpt_path, &text)?;
        rows.push(row);
        done_this_call += 1;
        log::info!(
            "epoch {epoch}: best {:.4} so far {:.4} ({wall:.2}s)",
            epoch_best.raw,
            ckpt.best.as_ref().map_or(f64::NAN, |b| b.raw)
        );
    }

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        epochs_completed: ckpt.next_epoch,
        best: ckpt.best,
        finished: ckpt.finished,
        rows,
    })
}

fn fresh_checkpoint(config: &ExperimentConfig, optimizer_seed: u64) -> Checkpoint {
    let state = match config.optimizer {
        Optimizer::Eons => {
            let mut rng = ChaCha8Rng::seed_from_u64(optimizer_seed);
            OptimizerState::Eons {
                population: evolution::init_population(&config.evolution(), &mut rng),
            }
        }
        Optimizer::Cmaes => {
            let mut s = CmaState::with_params(
                Vector::repeat(config.cmaes.initial_mean),
                config.cmaes.sigma0,
                Matrix::identity(),
                config.population_size,
            );
            s.cond_limit = config.cmaes.cond_limit;
            OptimizerState::Cmaes { state: Box::new(s) }
        }
    };
    Checkpoint {
        optimizer_seed,
        next_epoch: 0,
        cumulative_seconds: 0.0,
        best: None,
        finished: None,
        state,
    }
}

/// Reads `stats.csv` with the timing columns blanked, for determinism checks.
pub fn stats_without_timing(path: &Path) -> Result<String, RunError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| RunError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?
        .clone();
    let skip: Vec<bool> = headers.iter().map(|h| TIMING_COLUMNS.contains(&h)).collect();
    let mut out = String::new();
    let keep = |rec: &csv::StringRecord| {
        rec.iter()
            .zip(&skip)
            .filter(|(_, s)| !**s)
            .map(|(v, _)| v)
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&keep(&headers));
    out.push('\n');
    for rec in reader.records() {
        let rec = rec.map_err(|e| RunError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
        out.push_str(&keep(&rec));
        out.push('\n');
    }
    Ok(out)
}

/// Loads a saved controller artifact from disk.
pub fn load_artifact(path: &Path) -> Result<ControllerSpec, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ControllerSpec::from_json(&text)?)
}

/// Appends `text` to a file, creating it when needed.
pub fn append_text(path: &Path, text: &str) -> Result<(), RunError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
