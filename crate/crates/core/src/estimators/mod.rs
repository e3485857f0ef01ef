//! Estimators for regression with shuffled labels.
//!
//! * [`fit_ols_baseline`]: least squares on the labels as observed.
//! * [`fit_hard_em`]: alternate between the best permutation for the current
//!   weights and least squares on the relabeled data, from many starts.
//! * [`fit_stochastic_em`]: replace the best permutation with an average of
//!   permutations drawn by Metropolis-Hastings from their likelihood.
//!
//! The `_grouped` variants restrict every permutation to contiguous row groups.

mod config;
mod hard;
mod stochastic;

pub use config::{EMConfig, EmOverrides, DEFAULT_ITERATIONS};
pub use hard::{best_of_first, hard_em_restarts, RestartOutcome};

use crate::error::{ensure_len, Result};
use crate::groups::Groups;
use crate::linalg::{ols_fit, DesignMatrix};
use crate::permutation::{Permutation, SoftPermutation};

/// Features and labels with contiguous groups that labels are shuffled within.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub groups: Groups,
}

impl GroupedDataset {
    pub fn new(x: DesignMatrix, y: Vec<f64>, groups: Groups) -> Result<Self> {
        ensure_len("labels", x.rows(), y.len())?;
        ensure_len("group bounds", x.rows(), groups.total())?;
        Ok(GroupedDataset { x, y, groups })
    }

    pub fn ungrouped(x: DesignMatrix, y: Vec<f64>) -> Result<Self> {
        let groups = Groups::single(x.rows());
        GroupedDataset::new(x, y, groups)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PermutationEstimate {
    /// Single best permutation (OLS baseline: identity).
    Hard(Permutation),
    /// Normalized average of sampled permutations from the last iteration.
    Soft(SoftPermutation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// 1-based iteration number.
    pub iteration: usize,
    pub weights: Vec<f64>,
    pub residual_ss: f64,
    /// Fraction of accepted proposals; `None` for methods without a sampler.
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub weights: Vec<f64>,
    pub sigma2: f64,
    pub residual_ss: f64,
    pub permutation_estimate: PermutationEstimate,
    pub trace: Vec<TraceEntry>,
}

/// Least squares directly on the shuffled data.
pub fn fit_ols_baseline(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let fit = ols_fit(x, y)?;
    Ok(FitResult {
        trace: vec![TraceEntry {
            iteration: 1,
            weights: fit.weights.clone(),
            residual_ss: fit.residual_ss,
            acceptance_rate: None,
        }],
        weights: fit.weights,
        sigma2: fit.sigma2,
        residual_ss: fit.residual_ss,
        permutation_estimate: PermutationEstimate::Hard(Permutation::identity(x.rows())),
    })
}

pub fn fit_hard_em(x: &DesignMatrix, y: &[f64], cfg: &EMConfig) -> Result<FitResult> {
    ensure_len("labels", x.rows(), y.len())?;
    hard::fit(x, y, &Groups::single(x.rows()), cfg)
}

pub fn fit_hard_em_grouped(data: &GroupedDataset, cfg: &EMConfig) -> Result<FitResult> {
    hard::fit(&data.x, &data.y, &data.groups, cfg)
}

pub fn fit_stochastic_em(x: &DesignMatrix, y: &[f64], cfg: &EMConfig) -> Result<FitResult> {
    ensure_len("labels", x.rows(), y.len())?;
    stochastic::fit(x, y, &Groups::single(x.rows()), cfg, stochastic::Chain::Free)
}

pub fn fit_stochastic_em_grouped(data: &GroupedDataset, cfg: &EMConfig) -> Result<FitResult> {
    stochastic::fit(&data.x, &data.y, &data.groups, cfg, stochastic::Chain::Free)
}
