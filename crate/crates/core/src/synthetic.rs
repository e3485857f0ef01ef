//! Synthetic shuffled-regression data: Gaussian features and weights, Gaussian
//! noise, and the shuffling processes used by the comparison studies.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::groups::Groups;
use crate::linalg::{distance, DesignMatrix};
use crate::permutation::Permutation;
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.n <= self.d {
            return Err(Error::InvalidConfig(format!(
                "need n > d, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShuffleMode {
    Identity,
    /// Uniform permutation of all rows.
    Full,
    /// Uniform permutation within each group, followed by cross-group swaps.
    Grouped { groups: Groups, crossbin_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub x: DesignMatrix,
    /// `X w_true`.
    pub y_clean: Vec<f64>,
    pub noise: Vec<f64>,
    /// `pi_true` applied to `y_clean + noise`.
    pub y_observed: Vec<f64>,
    pub w_true: Vec<f64>,
    pub pi_true: Permutation,
    /// Cross-group swaps applied after the within-group shuffle.
    pub crossbin_swaps: Vec<(usize, usize)>,
}

impl SyntheticInstance {
    /// Noisy labels in the original row order.
    pub fn y_unshuffled(&self) -> Vec<f64> {
        self.y_clean.iter().zip(&self.noise).map(|(c, e)| c + e).collect()
    }
}

pub fn generate(spec: &SyntheticSpec, shuffle: &ShuffleMode) -> Result<SyntheticInstance> {
    spec.validate()?;
    let SyntheticSpec { n, d, sigma, seed } = *spec;
    let mut r = rng::stream(seed, purpose::DATA);
    let data: Vec<f64> = (0..n * d).map(|_| r.sample(StandardNormal)).collect();
    let x = DesignMatrix::new(n, d, data)?;
    let w_true: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
    let noise: Vec<f64> = (0..n)
        .map(|_| sigma * r.sample::<f64, _>(StandardNormal))
        .collect();
    let y_clean = x.matvec(&w_true)?;
    let noisy: Vec<f64> = y_clean.iter().zip(&noise).map(|(c, e)| c + e).collect();

    let (pi_true, crossbin_swaps) = match shuffle {
        ShuffleMode::Identity => (Permutation::identity(n), Vec::new()),
        ShuffleMode::Full => (
            Permutation::random(n, &mut rng::stream(seed, purpose::SHUFFLE)),
            Vec::new(),
        ),
        ShuffleMode::Grouped {
            groups,
            crossbin_fraction,
        } => {
            let g = grouped_shuffle(&noisy, groups, *crossbin_fraction, seed)?;
            (g.permutation, g.crossbin_swaps)
        }
    };
    let y_observed = pi_true.apply(&noisy)?;
    Ok(SyntheticInstance {
        x,
        y_clean,
        noise,
        y_observed,
        w_true,
        pi_true,
        crossbin_swaps,
    })
}

/// `||w_hat - w_true||_2`.
pub fn parameter_error(w_hat: &[f64], w_true: &[f64]) -> f64 {
    distance(w_hat, w_true)
}

/// Row pairs in the order they were swapped.
pub type SwapLog = Vec<(usize, usize)>;

/// Applies `swaps` uniformly random transpositions of distinct positions, in
/// sequence. Returns the labels and the swaps in the order applied.
pub fn progressive_shuffle(y: &[f64], swaps: usize, seed: u64) -> Result<(Vec<f64>, SwapLog)> {
    let n = y.len();
    if swaps > 0 && n < 2 {
        return Err(Error::InvalidConfig(format!(
            "cannot swap distinct positions of a length-{n} vector"
        )));
    }
    let mut r = rng::stream(seed, purpose::SHUFFLE);
    let log: Vec<(usize, usize)> = (0..swaps)
        .map(|_| {
            let i = r.random_range(0..n);
            let mut j = r.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let out = apply_swaps(y, &log)?;
    Ok((out, log))
}

/// Applies logged transpositions in order.
pub fn apply_swaps(y: &[f64], swaps: &[(usize, usize)]) -> Result<Vec<f64>> {
    let mut out = y.to_vec();
    for &(i, j) in swaps {
        for k in [i, j] {
            if k >= out.len() {
                return Err(Error::IndexOutOfRange { index: k, len: out.len() });
            }
        }
        out.swap(i, j);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedShuffle {
    pub labels: Vec<f64>,
    /// `labels[i] = y[permutation.mapping()[i]]`.
    pub permutation: Permutation,
    pub crossbin_swaps: Vec<(usize, usize)>,
}

/// Number of cross-group swaps for a fraction of `n` rows: `ceil(f n)`.
pub fn crossbin_count(fraction: f64, n: usize) -> usize {
    // Slack absorbs products such as 0.07 * 100 = 7.000000000000001.
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Shuffles uniformly within each group, then picks `ceil(f n)` distinct rows
/// and swaps each with a uniformly chosen row of another group.
pub fn grouped_shuffle(y: &[f64], groups: &Groups, crossbin_fraction: f64, seed: u64) -> Result<GroupedShuffle> {
    let n = y.len();
    ensure_len("group bounds", n, groups.total())?;
    if !(0.0..=1.0).contains(&crossbin_fraction) {
        return Err(Error::InvalidBounds(format!(
            "cross-bin fraction must lie in [0, 1], got {crossbin_fraction}"
        )));
    }
    let count = crossbin_count(crossbin_fraction, n);
    if count > 0 && groups.len() < 2 {
        return Err(Error::InvalidBounds(
            "cross-bin swaps need at least two groups".into(),
        ));
    }

    let mut permutation = Permutation::random_within(groups, &mut rng::stream(seed, purpose::SHUFFLE));
    let mut r = rng::stream(seed, purpose::CROSSBIN);
    let rows = index::sample(&mut r, n, count).into_vec();
    let mut crossbin_swaps = Vec::with_capacity(count);
    for i in rows {
        let own = groups.range(groups.group_of(i).expect("row inside groups"));
        let mut j = r.random_range(0..n - own.len());
        if j >= own.start {
            j += own.len();
        }
        permutation.swap(i, j);
        crossbin_swaps.push((i, j));
    }
    let labels = permutation.apply(y)?;
    Ok(GroupedShuffle {
        labels,
        permutation,
        crossbin_swaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ols_fit;
    use proptest::prelude::*;

    fn spec(n: usize, d: usize, sigma: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec { n, d, sigma, seed }
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    }

    #[test]
    fn noiseless_identity_is_exact() {
        let inst = generate(&spec(30, 4, 0.0, 1), &ShuffleMode::Identity).unwrap();
        assert_eq!(inst.y_observed, inst.x.matvec(&inst.w_true).unwrap());
        assert!(inst.pi_true.is_identity());
        let fit = ols_fit(&inst.x, &inst.y_observed).unwrap();
        assert!(parameter_error(&fit.weights, &inst.w_true) <= 1e-8);
    }

    #[test]
    fn validation() {
        assert!(generate(&spec(5, 5, 1.0, 0), &ShuffleMode::Full).is_err());
        assert!(generate(&spec(5, 0, 1.0, 0), &ShuffleMode::Full).is_err());
        assert!(generate(&spec(10, 2, -1.0, 0), &ShuffleMode::Full).is_err());
        assert!(generate(&spec(10, 2, f64::NAN, 0), &ShuffleMode::Full).is_err());
    }

    #[test]
    fn feature_mean_is_near_zero() {
        let inst = generate(&spec(100, 10, 0.3, 11), &ShuffleMode::Full).unwrap();
        let mean = inst.x.as_slice().iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() <= 3.0 / 1000f64.sqrt());
    }

    #[test]
    fn observed_labels_are_permuted_noisy_labels() {
        let inst = generate(&spec(50, 3, 0.5, 2), &ShuffleMode::Full).unwrap();
        let noisy = inst.y_unshuffled();
        assert_eq!(inst.y_observed, inst.pi_true.apply(&noisy).unwrap());
        assert_eq!(sorted(&inst.y_observed), sorted(&noisy));
        assert!(!inst.pi_true.is_identity());
    }

    #[test]
    fn progressive_shuffle_basics() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(progressive_shuffle(&y, 0, 1).unwrap(), (y.to_vec(), vec![]));
        for seed in 0..20 {
            let (out, log) = progressive_shuffle(&y, 1, seed).unwrap();
            assert_eq!(out.iter().zip(&y).filter(|(a, b)| a != b).count(), 2);
            assert_ne!(log[0].0, log[0].1);
        }
        assert!(progressive_shuffle(&[1.0], 1, 0).is_err());
        assert_eq!(progressive_shuffle(&[1.0], 0, 0).unwrap().0, vec![1.0]);
    }

    #[test]
    fn crossbin_swaps_are_counted_and_cross_groups() {
        let groups = Groups::equal_sized(1000, 4).unwrap();
        let y: Vec<f64> = (0..1000).map(f64::from).collect();
        let g = grouped_shuffle(&y, &groups, 0.01, 3).unwrap();
        assert_eq!(g.crossbin_swaps.len(), 10);
        for &(i, j) in &g.crossbin_swaps {
            assert_ne!(groups.group_of(i), groups.group_of(j));
        }
        assert_eq!(crossbin_count(0.07, 100), 7);
        assert_eq!(crossbin_count(0.0, 100), 0);
        assert_eq!(crossbin_count(0.001, 100), 1);
    }

    #[test]
    fn grouped_shuffle_validation() {
        let y = [0.0; 10];
        assert!(grouped_shuffle(&y, &Groups::single(10), 0.1, 0).is_err());
        assert!(grouped_shuffle(&y, &Groups::equal_sized(10, 2).unwrap(), 1.5, 0).is_err());
        assert!(grouped_shuffle(&y, &Groups::single(9), 0.0, 0).is_err());
        let g = grouped_shuffle(&y, &Groups::single(10), 0.0, 0).unwrap();
        assert!(g.crossbin_swaps.is_empty());
    }

    #[test]
    fn grouped_instance_records_swaps() {
        let groups = Groups::equal_sized(60, 3).unwrap();
        let mode = ShuffleMode::Grouped {
            groups,
            crossbin_fraction: 0.05,
        };
        let inst = generate(&spec(60, 2, 0.1, 8), &mode).unwrap();
        assert_eq!(inst.crossbin_swaps.len(), 3);
        assert_eq!(inst.y_observed, inst.pi_true.apply(&inst.y_unshuffled()).unwrap());
    }

    proptest! {
        #[test]
        fn generate_is_deterministic(n in 3usize..40, seed in any::<u64>()) {
            let s = spec(n, 2, 0.7, seed);
            prop_assert_eq!(generate(&s, &ShuffleMode::Full).unwrap(), generate(&s, &ShuffleMode::Full).unwrap());
        }

        #[test]
        fn reversed_swap_log_restores(y in prop::collection::vec(-10.0f64..10.0, 2..30), swaps in 0usize..40, seed in any::<u64>()) {
            let (out, log) = progressive_shuffle(&y, swaps, seed).unwrap();
            prop_assert_eq!(sorted(&out), sorted(&y));
            let rev: Vec<_> = log.iter().rev().cloned().collect();
            prop_assert_eq!(apply_swaps(&out, &rev).unwrap(), y);
        }

        #[test]
        fn within_group_shuffle_keeps_group_multisets(
            sizes in prop::collection::vec(1usize..8, 1..5),
            seed in any::<u64>(),
        ) {
            let mut offsets = vec![0];
            for s in &sizes {
                offsets.push(offsets.last().unwrap() + s);
            }
            let groups = Groups::new(offsets).unwrap();
            let n = groups.total();
            let y: Vec<f64> = (0..n).map(|i| (i * 7 % 11) as f64).collect();
            let g = grouped_shuffle(&y, &groups, 0.0, seed).unwrap();
            prop_assert!(g.permutation.respects(&groups));
            for r in groups.ranges() {
                prop_assert_eq!(sorted(&g.labels[r.clone()]), sorted(&y[r]));
            }
        }

        #[test]
        fn any_grouped_shuffle_keeps_multiset(seed in any::<u64>(), frac in 0.0f64..0.5) {
            let groups = Groups::equal_sized(40, 3).unwrap();
            let y: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
            let g = grouped_shuffle(&y, &groups, frac, seed).unwrap();
            prop_assert_eq!(sorted(&g.labels), sorted(&y));
            prop_assert_eq!(g.crossbin_swaps.len(), crossbin_count(frac, 40));
        }
    }
}
