use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use swarm_mill::controllers::ControllerSpec;
use swarm_mill::harness::{
    self, load_artifact, robustness_sweep, run_experiment, simulate_trace, write_replay, write_sweep, Evaluator,
    ExperimentConfig, Optimizer, RunControl,
};
use swarm_mill::snn::{Network, NetworkError};

#[derive(Parser)]
#[command(name = "swarm-mill", version, about = "Evolve and inspect swarm milling controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds; overrides the config's seed list.
    #[arg(short, long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads for parallel evaluation.
    #[arg(short, long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Override the number of epochs.
    #[arg(long)]
    epochs: Option<u64>,
    /// Continue from existing checkpoints in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve spiking network controllers.
    EvolveSnn(EvolveArgs),
    /// Optimize the four symbolic parameters with CMA-ES.
    EvolveSymbolic(EvolveArgs),
    /// Score a controller on one or more spawn seeds.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Network or symbolic parameter JSON.
        artifact: PathBuf,
    },
    /// Record trajectory, metrics and SVG frames for one spawn seed.
    Replay {
        #[command(flatten)]
        common: Common,
        artifact: PathBuf,
        /// Ticks between frames.
        #[arg(long)]
        frame_every: Option<u64>,
    },
    /// Evaluate a controller across many spawn seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        artifact: PathBuf,
        /// Number of seeds; the training seed is always first.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Parse and validate a network JSON file.
    ValidateNet { path: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EvolveSnn(a) => evolve(a, Optimizer::Eons),
        Command::EvolveSymbolic(a) => evolve(a, Optimizer::Cmaes),
        Command::Simulate { common, artifact } => simulate(&common, &artifact),
        Command::Replay {
            common,
            artifact,
            frame_every,
        } => replay(&common, &artifact, frame_every),
        Command::Sweep {
            common,
            artifact,
            count,
        } => sweep(&common, &artifact, count),
        Command::ValidateNet { path } => validate_net(&path),
    }
}

fn evolve(args: EvolveArgs, optimizer: Optimizer) -> Result<()> {
    let mut cfg = args.common.load()?;
    cfg.optimizer = optimizer;
    if let Some(e) = args.epochs {
        cfg.n_epochs = e;
    }
    let seeds = args
        .common
        .seeds
        .clone()
        .unwrap_or_else(|| if cfg.optimizer_seeds.is_empty() { vec![0] } else { cfg.optimizer_seeds.clone() });
    for seed in seeds {
        let dir = cfg.output_dir.join(format!("seed_{seed}"));
        let control = RunControl {
            resume: args.resume,
            max_epochs_this_call: None,
        };
        let out = run_experiment(&cfg, seed, &dir, control).with_context(|| format!("run with seed {seed}"))?;
        match &out.best {
            Some(b) => println!(
                "seed {seed}: {} epochs, best λ {:.6} (epoch {}) -> {}",
                out.epochs_completed,
                b.raw,
                b.epoch,
                dir.join(harness::experiment::BEST_FILE).display()
            ),
            None => println!("seed {seed}: no epochs run"),
        }
        if let Some(why) = &out.finished {
            println!("seed {seed}: {why}");
        }
    }
    Ok(())
}

fn eval_seeds(common: &Common, cfg: &ExperimentConfig) -> Vec<u64> {
    common.seeds.clone().unwrap_or_else(|| vec![cfg.train_seed])
}

fn simulate(common: &Common, artifact: &Path) -> Result<()> {
    let cfg = common.load()?;
    let spec = load_artifact(artifact)?;
    let ev = Evaluator::new(cfg.workers)?;
    let mut failed = false;
    for (seed, r) in eval_seeds(common, &cfg)
        .iter()
        .zip(ev.evaluate_seeds(&spec, &cfg.sim(), &eval_seeds(common, &cfg)))
    {
        match r {
            Ok(l) => println!("seed {seed}: lambda {l}"),
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                failed = true;
            }
        }
    }
    if failed {
        bail!("some simulations failed");
    }
    Ok(())
}

fn replay(common: &Common, artifact: &Path, frame_every: Option<u64>) -> Result<()> {
    let cfg = common.load()?;
    let spec = load_artifact(artifact)?;
    let every = frame_every.unwrap_or(cfg.frame_every);
    if every == 0 {
        bail!("--frame-every must be >= 1");
    }
    for seed in eval_seeds(common, &cfg) {
        let dir = cfg.output_dir.join(format!("replay_seed_{seed}"));
        let rep = simulate_trace(&spec, &cfg.sim(), seed)?;
        let frames = write_replay(&rep, &cfg.world, &dir, every)?;
        println!(
            "seed {seed}: lambda {} , {} frames in {}",
            rep.lambda,
            frames.len(),
            dir.display()
        );
    }
    Ok(())
}

fn sweep(common: &Common, artifact: &Path, count: Option<usize>) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(c) = count {
        cfg.sweep_size = c.max(1);
    }
    if let Some(s) = &common.seeds {
        cfg.eval_seeds = s.clone();
    }
    let spec: ControllerSpec = load_artifact(artifact)?;
    let ev = Evaluator::new(cfg.workers)?;
    let report = robustness_sweep(&spec, &cfg.sim(), &cfg.sweep_seeds(), &ev);
    write_sweep(&report, &cfg.output_dir)?;
    let s = report.summary;
    println!(
        "{} seeds ({} failed): mean {:.6} min {:.6} max {:.6} training {:?}",
        s.count, s.failures, s.mean, s.min, s.max, s.training_lambda
    );
    if s.failures > 0 {
        bail!("{} simulations failed", s.failures);
    }
    Ok(())
}

fn validate_net(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match Network::from_json(&text) {
        Ok(net) => {
            println!(
                "{}: valid ({} neurons, {} synapses)",
                path.display(),
                net.neuron_count(),
                net.synapse_count()
            );
            Ok(())
        }
        Err(NetworkError::Invalid(vs)) => {
            for v in &vs {
                eprintln!("{v}");
            }
            bail!("{}: {} violation(s)", path.display(), vs.len())
        }
        Err(e) => Err(e.into()),
    }
}
