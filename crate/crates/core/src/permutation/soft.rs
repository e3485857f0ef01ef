use crate::error::{ensure_len, Error, Result};
use crate::groups::Groups;

use super::Permutation;

/// Running sum of permutation matrices, stored as dense diagonal blocks.
///
/// Ungrouped use has a single `n x n` block. Entries outside the blocks are
/// structurally zero. Dividing by [`sample_count`](Self::sample_count) gives a
/// doubly stochastic matrix: the Monte Carlo estimate of `E[Pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPermutation {
    groups: Groups,
    blocks: Vec<Vec<f64>>,
    sample_count: usize,
}

impl SoftPermutation {
    pub fn new(n: usize) -> Self {
        SoftPermutation::block_diagonal(Groups::single(n))
    }

    pub fn block_diagonal(groups: Groups) -> Self {
        let blocks = groups.ranges().map(|r| vec![0.0; r.len() * r.len()]).collect();
        SoftPermutation {
            groups,
            blocks,
            sample_count: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.groups.total()
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Adds the 0/1 matrix of `p`.
    pub fn accumulate(&mut self, p: &Permutation) -> Result<()> {
        ensure_len("accumulated permutation", self.n(), p.len())?;
        if !p.respects(&self.groups) {
            return Err(Error::InvalidBounds(
                "permutation maps rows across group boundaries".into(),
            ));
        }
        let map = p.mapping();
        for (block, range) in self.blocks.iter_mut().zip(self.groups.ranges()) {
            let (start, m) = (range.start, range.len());
            for i in range {
                block[(i - start) * m + (map[i] - start)] += 1.0;
            }
        }
        self.sample_count += 1;
        Ok(())
    }

    /// Accumulated (unnormalized) weight of entry `(i, j)`.
    pub fn raw(&self, i: usize, j: usize) -> f64 {
        match (self.groups.group_of(i), self.groups.group_of(j)) {
            (Some(g), Some(h)) if g == h => {
                let r = self.groups.range(g);
                self.blocks[g][(i - r.start) * r.len() + (j - r.start)]
            }
            _ => 0.0,
        }
    }

    /// Normalized entry `(i, j)` of the averaged permutation matrix.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        let count = self.nonzero_count()?;
        Ok(self.raw(i, j) / count)
    }

    /// Dense row-major `n x n` normalized matrix.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let count = self.nonzero_count()?;
        let n = self.n();
        let mut dense = vec![0.0; n * n];
        for (block, range) in self.blocks.iter().zip(self.groups.ranges()) {
            let m = range.len();
            for a in 0..m {
                for b in 0..m {
                    dense[(range.start + a) * n + range.start + b] = block[a * m + b] / count;
                }
            }
        }
        Ok(dense)
    }

    /// `E[Pi]^T y`: the label vector de-shuffled by the averaged permutation.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        let count = self.nonzero_count()?;
        ensure_len("labels", self.n(), y.len())?;
        let mut out = vec![0.0; y.len()];
        for (block, range) in self.blocks.iter().zip(self.groups.ranges()) {
            let m = range.len();
            let ys = &y[range.clone()];
            let dst = &mut out[range];
            for (row, yi) in block.chunks_exact(m).zip(ys) {
                for (o, w) in dst.iter_mut().zip(row) {
                    if *w != 0.0 {
                        *o += (w / count) * yi;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Normalized row and column sums, in that order.
    pub fn marginals(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let count = self.nonzero_count()?;
        let mut rows = vec![0.0; self.n()];
        let mut cols = vec![0.0; self.n()];
        for (block, range) in self.blocks.iter().zip(self.groups.ranges()) {
            let m = range.len();
            for a in 0..m {
                for b in 0..m {
                    let w = block[a * m + b] / count;
                    rows[range.start + a] += w;
                    cols[range.start + b] += w;
                }
            }
        }
        Ok((rows, cols))
    }

    fn nonzero_count(&self) -> Result<f64> {
        if self.sample_count == 0 {
            Err(Error::EmptyAccumulator)
        } else {
            Ok(self.sample_count as f64)
        }
    }
}
