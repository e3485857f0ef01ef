use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    best_of_first, fit_hard_em, fit_ols_baseline, fit_stochastic_em, hard_em_restarts, EmOverrides,
};
use crate::groups::Groups;
use crate::permutation::Permutation;
use crate::rng::{self, derive_seed, purpose};
use crate::synthetic::{apply_swaps, generate, parameter_error, progressive_shuffle, ShuffleMode, SyntheticSpec};

use super::{method, timed, ExperimentReport, TrialRow, PARAM_ERROR};

/// Identity rows of one synthetic trial; metric fields are filled per row.
#[derive(Clone)]
struct RowStamp<'a> {
    experiment: &'a str,
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
    trial: usize,
}

impl RowStamp<'_> {
    fn row(&self, method: &str, metric_name: String, metric_value: f64, wall_ms: f64) -> TrialRow {
        TrialRow {
            experiment: self.experiment.into(),
            method: method.into(),
            n: self.n,
            d: self.d,
            sigma: Some(self.sigma),
            groups: 1,
            seed: self.seed,
            trial: self.trial,
            metric_name,
            metric_value,
            wall_ms,
        }
    }
}

fn collect_ordered(parts: Result<Vec<Vec<TrialRow>>>) -> Result<Vec<TrialRow>> {
    Ok(parts?.into_iter().flatten().collect())
}

/// Parameter error of both EM estimators across dataset sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweepConfig {
    pub name: String,
    pub n_values: Vec<usize>,
    pub d: usize,
    pub sigma: f64,
    pub trials: usize,
    /// Shuffle labels fully (the study) or not at all (a control).
    pub shuffle: bool,
    pub seed: u64,
    pub em: EmOverrides,
}

pub fn run_error_sweep(cfg: &ErrorSweepConfig) -> Result<ExperimentReport> {
    if let Some(&n) = cfg.n_values.iter().find(|&&n| n <= cfg.d) {
        return Err(Error::InvalidConfig(format!("need n > d, got n = {n}, d = {}", cfg.d)));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let parts = jobs
        .into_par_iter()
        .map(|(n, trial)| {
            let seed = derive_seed(derive_seed(cfg.seed, n as u64), trial as u64);
            let mode = if cfg.shuffle { ShuffleMode::Full } else { ShuffleMode::Identity };
            let inst = generate(&SyntheticSpec { n, d: cfg.d, sigma: cfg.sigma, seed }, &mode)?;
            let em = cfg.em.resolve(n, seed);
            let stamp = RowStamp {
                experiment: &cfg.name,
                n,
                d: cfg.d,
                sigma: cfg.sigma,
                seed,
                trial,
            };
            let (hard, hard_ms) = timed(|| fit_hard_em(&inst.x, &inst.y_observed, &em))?;
            let (soft, soft_ms) = timed(|| fit_stochastic_em(&inst.x, &inst.y_observed, &em))?;
            Ok(vec![
                stamp.row(method::HARD_EM, PARAM_ERROR.into(), parameter_error(&hard.weights, &inst.w_true), hard_ms),
                stamp.row(
                    method::STOCHASTIC_EM,
                    PARAM_ERROR.into(),
                    parameter_error(&soft.weights, &inst.w_true),
                    soft_ms,
                ),
            ])
        })
        .collect();
    Ok(ExperimentReport::new(&cfg.name, cfg, collect_ordered(parts)?))
}

/// One dataset fitted from several initial label orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    /// Seed of the dataset.
    pub seed: u64,
    /// One seed per reordering; it draws the reordering and seeds both estimators.
    pub reorder_seeds: Vec<u64>,
    pub em: EmOverrides,
}

impl ConsistencyConfig {
    pub fn with_reorderings(name: &str, n: usize, d: usize, sigma: f64, seed: u64, count: usize) -> Self {
        ConsistencyConfig {
            name: name.into(),
            n,
            d,
            sigma,
            seed,
            reorder_seeds: (0..count as u64).map(|r| derive_seed(seed, r)).collect(),
            em: EmOverrides::default(),
        }
    }
}

/// Records the parameter error after every iteration (`param_error@iter=k`)
/// and at the end (`param_error`).
pub fn run_consistency(cfg: &ConsistencyConfig) -> Result<ExperimentReport> {
    if cfg.reorder_seeds.len() < 2 {
        return Err(Error::InvalidConfig("need at least two reorderings".into()));
    }
    let (n, d) = (cfg.n, cfg.d);
    let inst = generate(&SyntheticSpec { n, d, sigma: cfg.sigma, seed: cfg.seed }, &ShuffleMode::Full)?;
    let parts = cfg
        .reorder_seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &seed)| {
            let order = Permutation::random(n, &mut rng::stream(seed, purpose::SHUFFLE));
            let y = order.apply(&inst.y_observed)?;
            let em = cfg.em.resolve(n, seed);
            let stamp = RowStamp {
                experiment: &cfg.name,
                n,
                d,
                sigma: cfg.sigma,
                seed,
                trial,
            };
            let (hard, hard_ms) = timed(|| fit_hard_em(&inst.x, &y, &em))?;
            let (soft, soft_ms) = timed(|| fit_stochastic_em(&inst.x, &y, &em))?;
            let mut rows = Vec::new();
            for (name, fit, ms) in [(method::HARD_EM, &hard, hard_ms), (method::STOCHASTIC_EM, &soft, soft_ms)] {
                for t in &fit.trace {
                    rows.push(stamp.row(
                        name,
                        format!("{PARAM_ERROR}@iter={}", t.iteration),
                        parameter_error(&t.weights, &inst.w_true),
                        ms,
                    ));
                }
                rows.push(stamp.row(name, PARAM_ERROR.into(), parameter_error(&fit.weights, &inst.w_true), ms));
            }
            Ok(rows)
        })
        .collect();
    Ok(ExperimentReport::new(&cfg.name, cfg, collect_ordered(parts)?))
}

/// Progressive pairwise swaps of initially ordered labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialShuffleConfig {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub max_swaps: usize,
    /// Fit after every `stride` swaps.
    pub stride: usize,
    pub series: usize,
    pub seed: u64,
    pub em: EmOverrides,
}

impl PartialShuffleConfig {
    pub fn swap_points(&self) -> Vec<usize> {
        (0..=self.max_swaps / self.stride.max(1)).map(|k| k * self.stride).collect()
    }
}

/// Each series fits OLS, hard EM and stochastic EM at every swap point
/// (`param_error@swaps=k`). Hard EM restart 0 starts from OLS on the current
/// labels, the same start as stochastic EM.
pub fn run_partial_shuffle(cfg: &PartialShuffleConfig) -> Result<ExperimentReport> {
    if cfg.stride == 0 {
        return Err(Error::InvalidConfig("stride must be at least 1".into()));
    }
    let (n, d) = (cfg.n, cfg.d);
    let points = cfg.swap_points();
    let jobs: Vec<(usize, usize)> = (0..cfg.series)
        .flat_map(|s| (0..points.len()).map(move |p| (s, p)))
        .collect();
    let parts = jobs
        .into_par_iter()
        .map(|(series, p)| {
            let seed = derive_seed(cfg.seed, series as u64);
            let inst = generate(&SyntheticSpec { n, d, sigma: cfg.sigma, seed }, &ShuffleMode::Identity)?;
            let (_, log) = progressive_shuffle(&inst.y_observed, cfg.max_swaps, seed)?;
            let swaps = points[p];
            let y = apply_swaps(&inst.y_observed, &log[..swaps])?;
            let mut em = cfg.em.resolve(n, seed);
            let stamp = RowStamp {
                experiment: &cfg.name,
                n,
                d,
                sigma: cfg.sigma,
                seed,
                trial: series,
            };
            let metric = format!("{PARAM_ERROR}@swaps={swaps}");
            let (ols, ols_ms) = timed(|| fit_ols_baseline(&inst.x, &y))?;
            let (soft, soft_ms) = timed(|| fit_stochastic_em(&inst.x, &y, &em))?;
            em.ols_init_restart = true;
            let (hard, hard_ms) = timed(|| fit_hard_em(&inst.x, &y, &em))?;
            Ok(vec![
                stamp.row(method::OLS, metric.clone(), parameter_error(&ols.weights, &inst.w_true), ols_ms),
                stamp.row(method::HARD_EM, metric.clone(), parameter_error(&hard.weights, &inst.w_true), hard_ms),
                stamp.row(method::STOCHASTIC_EM, metric, parameter_error(&soft.weights, &inst.w_true), soft_ms),
            ])
        })
        .collect();
    Ok(ExperimentReport::new(&cfg.name, cfg, collect_ordered(parts)?))
}

/// Hard EM error against its number of restarts, with stochastic EM as reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartStudyConfig {
    pub name: String,
    pub n: usize,
    pub d_values: Vec<usize>,
    pub restart_counts: Vec<usize>,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub em: EmOverrides,
}

/// Runs the largest restart count once and reports the best of each prefix
/// (`param_error@restarts=r`). Restarts draw from independent streams, so the
/// best of the first `r` is exactly a fit with `r` restarts.
pub fn run_restart_study(cfg: &RestartStudyConfig) -> Result<ExperimentReport> {
    let max = *cfg
        .restart_counts
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidConfig("no restart counts".into()))?;
    if cfg.restart_counts.contains(&0) {
        return Err(Error::InvalidConfig("restart counts must be positive".into()));
    }
    let n = cfg.n;
    let jobs: Vec<(usize, usize)> = cfg
        .d_values
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let parts = jobs
        .into_par_iter()
        .map(|(d, trial)| {
            let seed = derive_seed(derive_seed(cfg.seed, d as u64), trial as u64);
            let inst = generate(&SyntheticSpec { n, d, sigma: cfg.sigma, seed }, &ShuffleMode::Full)?;
            let mut em = cfg.em.resolve(n, seed);
            let stamp = RowStamp {
                experiment: &cfg.name,
                n,
                d,
                sigma: cfg.sigma,
                seed,
                trial,
            };
            let (soft, soft_ms) = timed(|| fit_stochastic_em(&inst.x, &inst.y_observed, &em))?;
            em.restarts = max;
            let (outcomes, hard_ms) =
                timed(|| hard_em_restarts(&inst.x, &inst.y_observed, &Groups::single(n), &em))?;
            let mut rows: Vec<TrialRow> = cfg
                .restart_counts
                .iter()
                .map(|&r| {
                    let best = best_of_first(&outcomes, r).expect("positive restart count");
                    stamp.row(
                        method::HARD_EM,
                        format!("{PARAM_ERROR}@restarts={r}"),
                        parameter_error(&best.weights, &inst.w_true),
                        hard_ms,
                    )
                })
                .collect();
            rows.push(stamp.row(
                method::STOCHASTIC_EM,
                PARAM_ERROR.into(),
                parameter_error(&soft.weights, &inst.w_true),
                soft_ms,
            ));
            Ok(rows)
        })
        .collect();
    Ok(ExperimentReport::new(&cfg.name, cfg, collect_ordered(parts)?))
}
