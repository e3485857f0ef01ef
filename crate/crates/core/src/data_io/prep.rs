use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::estimators::GroupedDataset;
use crate::groups::Groups;
use crate::linalg::DesignMatrix;
use crate::permutation::argsort;
use crate::rng::{self, purpose};

/// The affine map taking the label range onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScaling {
    pub min: f64,
    pub max: f64,
}

impl LabelScaling {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Rescales labels so the minimum maps to 0 and the maximum to 1.
pub fn normalize_labels(y: &[f64]) -> Result<(Vec<f64>, LabelScaling)> {
    let first = *y
        .first()
        .ok_or_else(|| Error::DimensionMismatch("cannot normalize an empty label vector".into()))?;
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::DegenerateLabels(first));
    }
    let scaling = LabelScaling { min, max };
    Ok((y.iter().map(|v| scaling.apply(*v)).collect(), scaling))
}

/// Sorts rows ascending by `key` (stable) and cuts them into `g` contiguous
/// groups whose sizes differ by at most one, larger groups first.
pub fn group_by_key(x: &DesignMatrix, y: &[f64], key: &[f64], g: usize) -> Result<GroupedDataset> {
    ensure_len("labels", x.rows(), y.len())?;
    ensure_len("grouping key", x.rows(), key.len())?;
    let groups = Groups::equal_sized(x.rows(), g)?;
    let order = argsort(key);
    let xs = x.select_rows(&order)?;
    let ys = order.iter().map(|&i| y[i]).collect();
    GroupedDataset::new(xs, ys, groups)
}

pub fn group_by_label_quantiles(x: &DesignMatrix, y: &[f64], g: usize) -> Result<GroupedDataset> {
    group_by_key(x, y, y, g)
}

pub fn group_by_feature(x: &DesignMatrix, y: &[f64], feature: usize, g: usize) -> Result<GroupedDataset> {
    if feature >= x.cols() {
        return Err(Error::IndexOutOfRange {
            index: feature,
            len: x.cols(),
        });
    }
    group_by_key(x, y, &x.column(feature), g)
}

/// Train/test partition of a grouped dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    /// Training rows in their grouped order, regrouped into as many
    /// equal-sized groups as the input had.
    pub train: GroupedDataset,
    pub test_x: DesignMatrix,
    /// True labels of the test rows.
    pub test_y: Vec<f64>,
    /// Row indices of the input, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub split_seed: u64,
}

/// Holds out `round(n * test_fraction)` uniformly chosen rows.
pub fn split_train_test(data: &GroupedDataset, test_fraction: f64, seed: u64) -> Result<SplitDataset> {
    let n = data.n();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidConfig(format!(
            "test fraction {test_fraction} of {n} rows leaves an empty test or training set"
        )));
    }
    let mut r = rng::stream(seed, purpose::SPLIT);
    let mut test_rows = index::sample(&mut r, n, n_test).into_vec();
    test_rows.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test_rows {
        is_test[i] = true;
    }
    let train_rows: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    let g = data.groups.len().min(train_rows.len());
    let train = GroupedDataset::new(
        data.x.select_rows(&train_rows)?,
        train_rows.iter().map(|&i| data.y[i]).collect(),
        Groups::equal_sized(train_rows.len(), g)?,
    )?;
    Ok(SplitDataset {
        train,
        test_x: data.x.select_rows(&test_rows)?,
        test_y: test_rows.iter().map(|&i| data.y[i]).collect(),
        train_rows,
        test_rows,
        split_seed: seed,
    })
}
