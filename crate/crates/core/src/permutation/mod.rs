//! Permutations of label positions.
//!
//! A [`Permutation`] is stored as an index array: entry `i` is the source row
//! placed at position `i`, so applying it to a vector `v` yields
//! `out[i] = v[mapping[i]]`. As a matrix, `Pi[i][mapping[i]] = 1`.

mod chain;
mod soft;

pub use chain::ChainState;
pub use soft::SoftPermutation;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::groups::Groups;
use crate::linalg::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n {
                return Err(Error::IndexOutOfRange { index: m, len: n });
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidConfig(format!(
                    "index {m} appears twice in permutation"
                )));
            }
        }
        Ok(Permutation { mapping })
    }

    /// Uniformly random permutation of `n` positions.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Permutation { mapping }
    }

    /// Independent uniform permutation inside each group; identity across groups.
    pub fn random_within<R: Rng + ?Sized>(groups: &Groups, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..groups.total()).collect();
        for range in groups.ranges() {
            mapping[range].shuffle(rng);
        }
        Permutation { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    /// Exchanges the sources at positions `i` and `j`.
    pub fn swap(&mut self, i: usize, j: usize) {
        self.mapping.swap(i, j);
    }

    /// `out[i] = v[mapping[i]]`, i.e. `Pi v`.
    pub fn apply<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        ensure_len("permuted vector", self.len(), v.len())?;
        Ok(self.mapping.iter().map(|&m| v[m].clone()).collect())
    }

    /// `out[mapping[i]] = v[i]`, i.e. `Pi^T v`.
    pub fn apply_transpose<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        ensure_len("permuted vector", self.len(), v.len())?;
        let mut out = v.to_vec();
        for (i, &m) in self.mapping.iter().enumerate() {
            out[m] = v[i].clone();
        }
        Ok(out)
    }

    /// `Pi X`: row `i` of the result is row `mapping[i]` of `x`.
    pub fn apply_rows(&self, x: &DesignMatrix) -> Result<DesignMatrix> {
        ensure_len("permuted matrix rows", self.len(), x.rows())?;
        x.select_rows(&self.mapping)
    }

    /// True when no position receives a source from another group.
    pub fn respects(&self, groups: &Groups) -> bool {
        groups.total() == self.len()
            && groups
                .ranges()
                .all(|r| self.mapping[r.clone()].iter().all(|m| r.contains(m)))
    }
}

pub fn apply_permutation(p: &Permutation, v: &[f64]) -> Result<Vec<f64>> {
    p.apply(v)
}

pub fn apply_permutation_rows(p: &Permutation, x: &DesignMatrix) -> Result<DesignMatrix> {
    p.apply_rows(x)
}

/// Indices of `v` in ascending order, ties kept in index order.
pub fn argsort(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    order
}

/// The permutation minimizing `||Pi scores - y||^2`.
///
/// Rank-matches the two vectors: the position holding the `r`-th smallest
/// label receives the `r`-th smallest score.
pub fn best_permutation(scores: &[f64], y: &[f64]) -> Result<Permutation> {
    ensure_len("scores", y.len(), scores.len())?;
    let mut mapping = vec![0; y.len()];
    for (s, t) in argsort(scores).into_iter().zip(argsort(y)) {
        mapping[t] = s;
    }
    Ok(Permutation { mapping })
}

/// Rank-matching restricted to each group: the block-diagonal minimizer.
pub fn best_permutation_grouped(scores: &[f64], y: &[f64], groups: &Groups) -> Result<Permutation> {
    ensure_len("scores", y.len(), scores.len())?;
    ensure_len("group bounds", y.len(), groups.total())?;
    let mut mapping = vec![0; y.len()];
    for range in groups.ranges() {
        let start = range.start;
        let s_order = argsort(&scores[range.clone()]);
        let y_order = argsort(&y[range]);
        for (s, t) in s_order.into_iter().zip(y_order) {
            mapping[start + t] = start + s;
        }
    }
    Ok(Permutation { mapping })
}

/// `||Pi scores - y||^2` under permutation `p`.
pub fn assignment_cost(p: &Permutation, scores: &[f64], y: &[f64]) -> Result<f64> {
    ensure_len("scores", p.len(), scores.len())?;
    ensure_len("labels", p.len(), y.len())?;
    Ok(p.mapping
        .iter()
        .zip(y)
        .map(|(&m, yi)| (scores[m] - yi).powi(2))
        .sum())
}
