use std::ops::Range;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};

use super::Permutation;

/// State of a Metropolis-Hastings chain over permutations.
///
/// The target is `q(Pi) ∝ prod_i exp(-((Pi X w)_i - y_i)^2 / sigma2)`, the
/// unnormalized Gaussian likelihood without the customary factor of one half.
/// `scores` below always means `X w` for the current weights. Residuals of the
/// current assignment are cached so a proposed 2-swap is scored in O(1).
#[derive(Debug, Clone)]
pub struct ChainState {
    current: Permutation,
    residuals: Vec<f64>,
    sigma2: f64,
}

impl ChainState {
    pub fn new(current: Permutation, scores: &[f64], y: &[f64], sigma2: f64) -> Result<Self> {
        let mut state = ChainState {
            residuals: Vec::new(),
            current,
            sigma2,
        };
        state.refresh(scores, y, sigma2)?;
        Ok(state)
    }

    /// Recomputes the residual cache after the scores, labels or variance changed.
    pub fn refresh(&mut self, scores: &[f64], y: &[f64], sigma2: f64) -> Result<()> {
        ensure_len("scores", self.current.len(), scores.len())?;
        ensure_len("labels", self.current.len(), y.len())?;
        if sigma2.is_nan() || sigma2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "chain variance must be positive, got {sigma2}"
            )));
        }
        self.residuals = self
            .current
            .mapping()
            .iter()
            .zip(y)
            .map(|(&m, yi)| scores[m] - yi)
            .collect();
        self.sigma2 = sigma2;
        Ok(())
    }

    pub fn current(&self) -> &Permutation {
        &self.current
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `log q(b) - log q(a)` where `a` is the current permutation and `b` is `a`
    /// with positions `i` and `j` exchanged. Only the two affected terms are read.
    pub fn log_ratio_swap(&self, i: usize, j: usize, scores: &[f64], y: &[f64]) -> Result<f64> {
        let n = self.current.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        ensure_len("scores", n, scores.len())?;
        ensure_len("labels", n, y.len())?;
        Ok(self.log_ratio_unchecked(i, j, scores, y))
    }

    #[inline]
    fn log_ratio_unchecked(&self, i: usize, j: usize, scores: &[f64], y: &[f64]) -> f64 {
        if i == j {
            return 0.0;
        }
        let map = self.current.mapping();
        let (ri, rj) = (self.residuals[i], self.residuals[j]);
        let ri_new = scores[map[j]] - y[i];
        let rj_new = scores[map[i]] - y[j];
        (ri * ri + rj * rj - ri_new * ri_new - rj_new * rj_new) / self.sigma2
    }

    /// Commits the swap of positions `i` and `j`.
    pub fn apply_swap(&mut self, i: usize, j: usize, scores: &[f64], y: &[f64]) {
        self.current.swap(i, j);
        let map = self.current.mapping();
        self.residuals[i] = scores[map[i]] - y[i];
        self.residuals[j] = scores[map[j]] - y[j];
    }

    /// One Metropolis-Hastings step proposing a uniformly random 2-swap inside
    /// `block`. The proposal is accepted with probability `min(1, q(b)/q(a))`.
    /// Returns whether the swap was accepted; blocks shorter than two rows
    /// never move and consume no randomness.
    pub fn mh_step<R: Rng + ?Sized>(
        &mut self,
        block: Range<usize>,
        scores: &[f64],
        y: &[f64],
        rng: &mut R,
    ) -> bool {
        let m = block.len();
        if m < 2 {
            return false;
        }
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let (i, j) = (block.start + a, block.start + b);
        let log_ratio = self.log_ratio_unchecked(i, j, scores, y);
        let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
        if accept {
            self.apply_swap(i, j, scores, y);
        }
        accept
    }

    /// True when every cached residual matches a fresh recomputation.
    pub fn is_consistent(&self, scores: &[f64], y: &[f64], tol: f64) -> bool {
        self.current
            .mapping()
            .iter()
            .zip(y)
            .zip(&self.residuals)
            .all(|((&m, yi), r)| (scores[m] - yi - r).abs() <= tol)
    }
}
