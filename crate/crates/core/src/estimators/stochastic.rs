use rand::Rng;

use crate::error::Result;
use crate::groups::Groups;
use crate::linalg::{DesignMatrix, LeastSquares};
use crate::permutation::{ChainState, Permutation, SoftPermutation};
use crate::rng::{self, purpose};

use super::{EMConfig, FitResult, PermutationEstimate, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Chain {
    Free,
    /// Proposals are drawn but never accepted.
    #[cfg_attr(not(test), allow(dead_code))]
    Pinned,
}

pub(super) fn fit(
    x: &DesignMatrix,
    y: &[f64],
    groups: &Groups,
    cfg: &EMConfig,
    chain_mode: Chain,
) -> Result<FitResult> {
    cfg.validate()?;
    let ls = LeastSquares::new(x)?;
    let mut fit = ls.solve(y)?;
    let mut rng = rng::stream(cfg.seed, purpose::CHAIN);

    let mut labels = y.to_vec();
    let mut scores = x.matvec(&fit.weights)?;
    // The chain persists across outer iterations and is never reset.
    let mut chain = ChainState::new(Permutation::identity(y.len()), &scores, &labels, fit.sampler_sigma2())?;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut soft = SoftPermutation::block_diagonal(groups.clone());

    for iteration in 1..=cfg.iterations {
        let target: &[f64] = if cfg.non_cumulative { y } else { &labels };
        chain.refresh(&scores, target, fit.sampler_sigma2())?;
        soft = SoftPermutation::block_diagonal(groups.clone());
        let mut accepted = 0usize;
        for step in 1..=cfg.sampling_steps {
            let block = if groups.len() == 1 {
                groups.range(0)
            } else {
                groups.range(rng.random_range(0..groups.len()))
            };
            let moved = match chain_mode {
                Chain::Free => chain.mh_step(block, &scores, target, &mut rng),
                Chain::Pinned => false,
            };
            accepted += usize::from(moved);
            if step > cfg.burn_steps && step % cfg.sample_gap == 0 {
                soft.accumulate(chain.current())?;
            }
        }
        let relabeled = soft.apply_transpose(target)?;
        labels = relabeled;
        fit = ls.solve(&labels)?;
        scores = x.matvec(&fit.weights)?;
        trace.push(TraceEntry {
            iteration,
            weights: fit.weights.clone(),
            residual_ss: fit.residual_ss,
            acceptance_rate: Some(accepted as f64 / cfg.sampling_steps as f64),
        });
    }

    Ok(FitResult {
        weights: fit.weights,
        sigma2: fit.sigma2,
        residual_ss: fit.residual_ss,
        permutation_estimate: PermutationEstimate::Soft(soft),
        trace,
    })
}
