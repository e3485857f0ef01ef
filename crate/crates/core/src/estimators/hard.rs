use rayon::prelude::*;

use crate::error::Result;
use crate::groups::Groups;
use crate::linalg::{DesignMatrix, LeastSquares};
use crate::permutation::{best_permutation_grouped, Permutation};
use crate::rng::{self, purpose};

use super::{EMConfig, FitResult, PermutationEstimate, TraceEntry};

/// Restarts whose final objectives differ by less than this are tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Final state of one hard EM initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub restart: usize,
    pub weights: Vec<f64>,
    pub sigma2: f64,
    /// `||Pi X w - y||^2` at the final iterate.
    pub residual_ss: f64,
    /// Row `permutation[i]` of `X` is matched to label `i`.
    pub permutation: Permutation,
    pub trace: Vec<TraceEntry>,
}

/// Runs every restart of hard EM. Restart `r` draws from its own stream, so
/// the outcomes do not depend on scheduling.
pub fn hard_em_restarts(
    x: &DesignMatrix,
    y: &[f64],
    groups: &Groups,
    cfg: &EMConfig,
) -> Result<Vec<RestartOutcome>> {
    cfg.validate_hard()?;
    let ls = LeastSquares::new(x)?;
    (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(&ls, y, groups, cfg, r))
        .collect()
}

/// Best of the first `count` restarts: lowest final objective, earliest index on ties.
pub fn best_of_first(outcomes: &[RestartOutcome], count: usize) -> Option<&RestartOutcome> {
    let mut best: Option<&RestartOutcome> = None;
    for o in outcomes.iter().take(count) {
        match best {
            Some(b) if o.residual_ss >= b.residual_ss - TIE_TOLERANCE => {}
            _ => best = Some(o),
        }
    }
    best
}

pub(super) fn fit(x: &DesignMatrix, y: &[f64], groups: &Groups, cfg: &EMConfig) -> Result<FitResult> {
    let outcomes = hard_em_restarts(x, y, groups, cfg)?;
    let best = best_of_first(&outcomes, outcomes.len())
        .expect("at least one restart")
        .clone();
    Ok(FitResult {
        weights: best.weights,
        sigma2: best.sigma2,
        residual_ss: best.residual_ss,
        permutation_estimate: PermutationEstimate::Hard(best.permutation),
        trace: best.trace,
    })
}

fn run_restart(
    ls: &LeastSquares<'_>,
    y: &[f64],
    groups: &Groups,
    cfg: &EMConfig,
    restart: usize,
) -> Result<RestartOutcome> {
    let x = ls.design();
    let start = if cfg.ols_init_restart && restart == 0 {
        y.to_vec()
    } else {
        let mut r = rng::stream(cfg.seed, purpose::RESTART_BASE + restart as u64);
        Permutation::random_within(groups, &mut r).apply(y)?
    };
    let mut weights = ls.solve(&start)?.weights;

    let mut trace: Vec<TraceEntry> = Vec::with_capacity(cfg.iterations);
    let mut previous: Option<Permutation> = None;
    let mut last_fit = None;
    for iteration in 1..=cfg.iterations {
        let scores = x.matvec(&weights)?;
        let p = best_permutation_grouped(&scores, y, groups)?;
        if previous.as_ref() == Some(&p) {
            // Same assignment gives the same weights: every later iteration repeats.
            let last = trace.last().expect("fixed point after one iteration").clone();
            for it in iteration..=cfg.iterations {
                trace.push(TraceEntry {
                    iteration: it,
                    ..last.clone()
                });
            }
            break;
        }
        // Least squares on (Pi X, y) is least squares on (X, Pi^T y).
        let fit = ls.solve(&p.apply_transpose(y)?)?;
        weights.clone_from(&fit.weights);
        trace.push(TraceEntry {
            iteration,
            weights: fit.weights.clone(),
            residual_ss: fit.residual_ss,
            acceptance_rate: None,
        });
        last_fit = Some(fit);
        previous = Some(p);
    }
    let fit = last_fit.expect("iterations >= 1");
    Ok(RestartOutcome {
        restart,
        weights: fit.weights,
        sigma2: fit.sigma2,
        residual_ss: fit.residual_ss,
        permutation: previous.expect("iterations >= 1"),
        trace,
    })
}

impl EMConfig {
    /// Hard EM ignores the sampler settings.
    fn validate_hard(&self) -> Result<()> {
        EMConfig {
            sampling_steps: 1,
            burn_steps: 0,
            sample_gap: 1,
            ..self.clone()
        }
        .validate()
    }
}
