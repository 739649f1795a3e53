//! CMA-ES over the four normalized symbolic-controller parameters.
//!
//! Strategy parameters follow the standard defaults of Hansen's tutorial
//! formulation (positive recombination weights over the best `λ/2`
//! samples, cumulative step-size adaptation, rank-one plus rank-μ
//! covariance update). Candidates are clipped to `[0, 1]⁴` for evaluation;
//! the update uses the unclipped samples.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::grid_value;
use crate::controllers::SymbolicParams;
use crate::sim::WorldConfig;

pub const DIM: usize = 4;
pub type Vector = SVector<f64, DIM>;
pub type Matrix = SMatrix<f64, DIM, DIM>;

/// Condition number of `C` past which the search stops.
pub const DEFAULT_COND_LIMIT: f64 = 1e14;
/// Grid steps per unit in normalized parameter space (spacing 0.05).
pub const GRID_STEPS: i32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmaError {
    #[error("optimizer has terminated: {0:?}")]
    Terminated(Termination),
    #[error("fitness {value} for candidate {index} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("expected {expected} fitness values, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// `cond(C)` exceeded the limit; carries the observed value.
    ConditionNumber(f64),
    /// The covariance lost positive definiteness.
    NotPositiveDefinite,
}

/// Standard strategy parameters for a given population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mueff: f64,
    pub cs: f64,
    pub ds: f64,
    pub cc: f64,
    pub c1: f64,
    pub cmu: f64,
    pub chi_n: f64,
}

impl Strategy {
    pub fn new(lambda: usize) -> Self {
        assert!(lambda >= 2, "population must hold at least two samples");
        let n = DIM as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cs = (mueff + 2.0) / (n + mueff + 5.0);
        let ds = 1.0 + 2.0 * (((mueff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
        let c1 = 2.0 / ((n + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0).powi(2) + mueff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            lambda,
            mu,
            weights,
            mueff,
            cs,
            ds,
            cc,
            c1,
            cmu,
            chi_n,
        }
    }

    /// Default population size `4 + ⌊3 ln n⌋` for this dimension.
    pub fn default_lambda() -> usize {
        4 + (3.0 * (DIM as f64).ln()).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaState {
    pub mean: Vector,
    pub sigma: f64,
    pub cov: Matrix,
    pub p_sigma: Vector,
    pub p_c: Vector,
    pub generation: u64,
    pub strategy: Strategy,
    pub cond_limit: f64,
    /// Eigenbasis of `cov` (columns) and the square roots of its eigenvalues.
    basis: Matrix,
    scales: Vector,
    pub terminated: Option<Termination>,
}

/// One sampled point: the raw draw and its clipped evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub raw: Vector,
    pub clipped: [f64; DIM],
}

impl CmaState {
    /// Mean `0.5·1`, `σ = 0.2`, `C = I`.
    pub fn new(lambda: usize) -> Self {
        Self::with_params(Vector::repeat(0.5), 0.2, Matrix::identity(), lambda)
    }

    pub fn with_params(mean: Vector, sigma: f64, cov: Matrix, lambda: usize) -> Self {
        let mut s = Self {
            mean,
            sigma,
            cov,
            p_sigma: Vector::zeros(),
            p_c: Vector::zeros(),
            generation: 0,
            strategy: Strategy::new(lambda),
            cond_limit: DEFAULT_COND_LIMIT,
            basis: Matrix::identity(),
            scales: Vector::repeat(1.0),
            terminated: None,
        };
        s.refresh_decomposition();
        s
    }

    pub fn lambda(&self) -> usize {
        self.strategy.lambda
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.scales.max();
        let min = self.scales.min();
        (max * max) / (min * min)
    }

    fn refresh_decomposition(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(self.cov);
        let min = eig.eigenvalues.min();
        if !(min > 0.0) || !eig.eigenvalues.iter().all(|v| v.is_finite()) {
            self.terminated = Some(Termination::NotPositiveDefinite);
            return;
        }
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(f64::sqrt);
        let cond = eig.eigenvalues.max() / min;
        if cond > self.cond_limit {
            self.terminated = Some(Termination::ConditionNumber(cond));
        }
    }

    /// Samples `λ` candidates `m + σ·B·D·z`.
    pub fn ask(&self, rng: &mut impl Rng) -> Result<Vec<Candidate>, CmaError> {
        if let Some(t) = self.terminated {
            return Err(CmaError::Terminated(t));
        }
        Ok((0..self.strategy.lambda)
            .map(|_| {
                let z = Vector::from_fn(|_, _| rng.sample(StandardNormal));
                let y = self.basis * self.scales.component_mul(&z);
                let raw = self.mean + y * self.sigma;
                let clipped = std::array::from_fn(|i| raw[i].clamp(0.0, 1.0));
                Candidate { raw, clipped }
            })
            .collect())
    }

    /// Updates the distribution from fitness values to be maximized.
    pub fn tell(&mut self, candidates: &[Candidate], fitness: &[f64]) -> Result<(), CmaError> {
        if let Some(t) = self.terminated {
            return Err(CmaError::Terminated(t));
        }
        if candidates.len() != fitness.len() || fitness.len() != self.strategy.lambda {
            return Err(CmaError::Length {
                expected: self.strategy.lambda,
                got: fitness.len().min(candidates.len()),
            });
        }
        if let Some((index, &value)) = fitness.iter().enumerate().find(|(_, f)| !f.is_finite()) {
            return Err(CmaError::NonFinite { index, value });
        }
        let mut order: Vec<usize> = (0..fitness.len()).collect();
        order.sort_by(|&i, &j| fitness[j].total_cmp(&fitness[i]).then(i.cmp(&j)));

        let st = &self.strategy;
        let n = DIM as f64;
        let old_mean = self.mean;
        let steps: Vec<Vector> = order[..st.mu]
            .iter()
            .map(|&i| (candidates[i].raw - old_mean) / self.sigma)
            .collect();
        let y_w: Vector = steps
            .iter()
            .zip(&st.weights)
            .fold(Vector::zeros(), |acc, (y, w)| acc + y * *w);
        self.mean = old_mean + y_w * self.sigma;

        let inv_sqrt = self.basis * Matrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * self.basis.transpose();
        self.p_sigma = self.p_sigma * (1.0 - st.cs) + inv_sqrt * y_w * (st.cs * (2.0 - st.cs) * st.mueff).sqrt();
        let ps_norm = self.p_sigma.norm();
        let gen = (self.generation + 1) as i32;
        let h_sigma = ps_norm / (1.0 - (1.0 - st.cs).powi(2 * gen)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * st.chi_n;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = self.p_c * (1.0 - st.cc) + y_w * (hs * (st.cc * (2.0 - st.cc) * st.mueff).sqrt());

        let rank_one = self.p_c * self.p_c.transpose();
        let rank_mu = steps
            .iter()
            .zip(&st.weights)
            .fold(Matrix::zeros(), |acc, (y, w)| acc + (y * y.transpose()) * *w);
        let delta_h = (1.0 - hs) * st.cc * (2.0 - st.cc);
        self.cov = self.cov * (1.0 - st.c1 - st.cmu)
            + (rank_one + self.cov * delta_h) * st.c1
            + rank_mu * st.cmu;
        self.sigma *= ((st.cs / st.ds) * (ps_norm / st.chi_n - 1.0)).exp();
        self.generation += 1;
        self.refresh_decomposition();
        Ok(())
    }
}

/// Rounds to the nearest multiple of 0.05 in `[0, 1]`, ties upward.
/// Returns the grid index in `0..=20`.
pub fn snap_index(u: f64) -> i32 {
    ((u.clamp(0.0, 1.0) * GRID_STEPS as f64 + 0.5).floor() as i32).clamp(0, GRID_STEPS)
}

pub fn snap_unit(u: f64) -> f64 {
    f64::from(snap_index(u)) / f64::from(GRID_STEPS)
}

/// Maps a normalized candidate `(v_a, v_b, ω_a, ω_b)` onto the command grid:
/// snap to 0.05, then `u ↦ (2u − 1)·limit`.
pub fn discretize(candidate: &[f64; DIM], config: &WorldConfig) -> SymbolicParams {
    let map = |u: f64, limit: f64| grid_value(snap_index(u) - GRID_STEPS / 2, limit);
    SymbolicParams {
        v_a: map(candidate[0], config.v_max),
        v_b: map(candidate[1], config.v_max),
        omega_a: map(candidate[2], config.omega_max),
        omega_b: map(candidate[3], config.omega_max),
    }
}
