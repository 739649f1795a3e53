//! Robustness sweep: one controller over many spawn seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::eval::{EvalError, Evaluator};
use super::experiment::RunError;
use crate::controllers::ControllerSpec;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// λ on the first seed, the training spawn.
    pub training_lambda: Option<f64>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<(u64, Result<f64, EvalError>)>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|(_, r)| r.as_ref().ok().copied()).collect()
    }
}

pub fn robustness_sweep(
    spec: &ControllerSpec,
    config: &SimConfig,
    seeds: &[u64],
    evaluator: &Evaluator,
) -> SweepReport {
    let results = evaluator.evaluate_seeds(spec, config, seeds);
    let rows: Vec<_> = seeds.iter().copied().zip(results).collect();
    let ok: Vec<f64> = rows.iter().filter_map(|(_, r)| r.as_ref().ok().copied()).collect();
    let mean = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().sum::<f64>() / ok.len() as f64
    };
    let summary = SweepSummary {
        count: ok.len(),
        failures: rows.len() - ok.len(),
        mean,
        min: ok.iter().copied().fold(f64::INFINITY, f64::min),
        max: ok.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        training_lambda: rows.first().and_then(|(_, r)| r.as_ref().ok().copied()),
    };
    SweepReport { rows, summary }
}

pub fn write_sweep(report: &SweepReport, out_dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut csv = String::from("seed,lambda,error\n");
    for (seed, r) in &report.rows {
        match r {
            Ok(l) => writeln!(csv, "{seed},{l},").unwrap(),
            Err(e) => writeln!(csv, "{seed},,\"{}\"", e.to_string().replace('"', "'")).unwrap(),
        }
    }
    let path = out_dir.join(SWEEP_FILE);
    fs::write(&path, csv).map_err(|source| RunError::Io { path, source })?;
    let path = out_dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}
