use std::ops::Range;

use crate::error::{Error, Result};

/// Contiguous row groups, given as `G + 1` ascending offsets from `0` to `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Groups {
    offsets: Vec<usize>,
}

impl Groups {
    pub fn new(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 {
            return Err(Error::InvalidBounds(format!(
                "need at least two offsets, got {offsets:?}"
            )));
        }
        if offsets[0] != 0 {
            return Err(Error::InvalidBounds(format!(
                "offsets must start at 0, got {}",
                offsets[0]
            )));
        }
        if let Some(w) = offsets.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBounds(format!(
                "offsets must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Groups { offsets })
    }

    /// Checks the groups cover exactly `n` rows.
    pub fn for_rows(offsets: Vec<usize>, n: usize) -> Result<Self> {
        let groups = Groups::new(offsets)?;
        if groups.total() != n {
            return Err(Error::InvalidBounds(format!(
                "offsets end at {}, expected {n}",
                groups.total()
            )));
        }
        Ok(groups)
    }

    /// One group holding all rows.
    pub fn single(n: usize) -> Self {
        Groups {
            offsets: vec![0, n],
        }
    }

    pub fn singletons(n: usize) -> Self {
        Groups {
            offsets: (0..=n).collect(),
        }
    }

    /// `count` contiguous groups over `n` rows whose sizes differ by at most one,
    /// larger groups first.
    pub fn equal_sized(n: usize, count: usize) -> Result<Self> {
        if count == 0 || count > n {
            return Err(Error::InvalidG {
                groups: count,
                rows: n,
            });
        }
        let (base, extra) = (n / count, n % count);
        let mut offsets = Vec::with_capacity(count + 1);
        offsets.push(0);
        for g in 0..count {
            let size = base + usize::from(g < extra);
            offsets.push(offsets[g] + size);
        }
        Ok(Groups { offsets })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().expect("validated non-empty")
    }

    pub fn range(&self, g: usize) -> Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn ranges(&self) -> impl ExactSizeIterator<Item = Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges().map(|r| r.len()).collect()
    }

    /// Index of the group containing `row`.
    pub fn group_of(&self, row: usize) -> Option<usize> {
        if row >= self.total() {
            return None;
        }
        Some(self.offsets.partition_point(|&o| o <= row) - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Groups::new(vec![0]).is_err());
        assert!(Groups::new(vec![1, 3]).is_err());
        assert!(Groups::new(vec![0, 2, 2, 4]).is_err());
        assert!(Groups::for_rows(vec![0, 2, 4], 5).is_err());
        assert!(Groups::for_rows(vec![0, 2, 5], 5).is_ok());
    }

    #[test]
    fn equal_sized_puts_remainder_first() {
        assert_eq!(Groups::equal_sized(10, 3).unwrap().sizes(), vec![4, 3, 3]);
        assert_eq!(Groups::equal_sized(6, 3).unwrap().sizes(), vec![2, 2, 2]);
        assert_eq!(Groups::equal_sized(5, 5).unwrap(), Groups::singletons(5));
        assert!(matches!(
            Groups::equal_sized(3, 4),
            Err(Error::InvalidG { .. })
        ));
        assert!(Groups::equal_sized(3, 0).is_err());
    }

    #[test]
    fn group_lookup() {
        let g = Groups::new(vec![0, 2, 5]).unwrap();
        assert_eq!(g.group_of(0), Some(0));
        assert_eq!(g.group_of(1), Some(0));
        assert_eq!(g.group_of(2), Some(1));
        assert_eq!(g.group_of(4), Some(1));
        assert_eq!(g.group_of(5), None);
    }
}
