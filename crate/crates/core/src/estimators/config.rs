use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings shared by the EM estimators.
///
/// `restarts` and `ols_init_restart` only affect hard EM; `sampling_steps`,
/// `burn_steps`, `sample_gap` and `non_cumulative` only affect stochastic EM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EMConfig {
    /// Outer EM iterations `k`.
    pub iterations: usize,
    /// Metropolis-Hastings steps per iteration `s`.
    pub sampling_steps: usize,
    /// Leading steps of each iteration that are never collected `s'`.
    pub burn_steps: usize,
    /// Collect the chain state every `sample_gap` steps after burn-in.
    pub sample_gap: usize,
    /// Number of random initializations for hard EM.
    pub restarts: usize,
    pub seed: u64,
    /// Apply each averaged permutation to the original labels instead of the
    /// previous iteration's labels, and run the chain against them.
    pub non_cumulative: bool,
    /// Make hard EM restart 0 start from OLS on the labels as given rather than
    /// from a random relabeling.
    pub ols_init_restart: bool,
}

pub const DEFAULT_ITERATIONS: usize = 50;

impl EMConfig {
    /// Defaults for `n` rows: `k = 50`, `s = ceil(n ln n)`, `s' = n`,
    /// `g = max(1, floor(n / 10))`, `R = n`.
    pub fn for_n(n: usize, seed: u64) -> Self {
        let nf = n as f64;
        EMConfig {
            iterations: DEFAULT_ITERATIONS,
            sampling_steps: (nf * nf.ln()).ceil().max(0.0) as usize,
            burn_steps: n,
            sample_gap: (n / 10).max(1),
            restarts: n.max(1),
            seed,
            non_cumulative: false,
            ols_init_restart: false,
        }
    }

    /// Number of chain states collected per iteration.
    pub fn collected_samples(&self) -> usize {
        if self.sample_gap == 0 || self.sampling_steps <= self.burn_steps {
            return 0;
        }
        self.sampling_steps / self.sample_gap - self.burn_steps / self.sample_gap
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if self.sample_gap == 0 {
            return fail("sample gap must be at least 1".into());
        }
        if self.restarts == 0 {
            return fail("restarts must be at least 1".into());
        }
        if self.sampling_steps <= self.burn_steps {
            return fail(format!(
                "sampling steps ({}) must exceed burn steps ({})",
                self.sampling_steps, self.burn_steps
            ));
        }
        if self.collected_samples() == 0 {
            return fail(format!(
                "no samples collected with s = {}, s' = {}, gap = {}",
                self.sampling_steps, self.burn_steps, self.sample_gap
            ));
        }
        Ok(())
    }
}

/// Optional overrides applied on top of [`EMConfig::for_n`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmOverrides {
    pub iterations: Option<usize>,
    pub sampling_steps: Option<usize>,
    pub burn_steps: Option<usize>,
    pub sample_gap: Option<usize>,
    pub restarts: Option<usize>,
    pub non_cumulative: bool,
}

impl EmOverrides {
    pub fn resolve(&self, n: usize, seed: u64) -> EMConfig {
        let mut cfg = EMConfig::for_n(n, seed);
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.sampling_steps {
            cfg.sampling_steps = v;
        }
        if let Some(v) = self.burn_steps {
            cfg.burn_steps = v;
        }
        if let Some(v) = self.sample_gap {
            cfg.sample_gap = v;
        }
        if let Some(v) = self.restarts {
            cfg.restarts = v;
        }
        cfg.non_cumulative = self.non_cumulative;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_n() {
        let cfg = EMConfig::for_n(200, 1);
        assert_eq!(cfg.iterations, 50);
        assert_eq!(cfg.sampling_steps, 1060); // ceil(200 ln 200) = ceil(1059.66)
        assert_eq!(cfg.burn_steps, 200);
        assert_eq!(cfg.sample_gap, 20);
        assert_eq!(cfg.restarts, 200);
        assert_eq!(cfg.collected_samples(), 53 - 10);
        cfg.validate().unwrap();

        let small = EMConfig::for_n(6, 0);
        assert_eq!(small.sampling_steps, 11);
        assert_eq!(small.sample_gap, 1);
        assert_eq!(small.collected_samples(), 5);
    }

    #[test]
    fn validation_rejects_empty_collection() {
        let mut cfg = EMConfig::for_n(50, 0);
        cfg.sampling_steps = cfg.burn_steps;
        assert!(cfg.validate().is_err());
        let mut cfg = EMConfig::for_n(50, 0);
        cfg.burn_steps = 41;
        cfg.sampling_steps = 44;
        cfg.sample_gap = 5;
        assert_eq!(cfg.collected_samples(), 0);
        assert!(cfg.validate().is_err());
        cfg.sampling_steps = 45;
        assert_eq!(cfg.collected_samples(), 1);
        cfg.validate().unwrap();
        for field in 0..3 {
            let mut bad = EMConfig::for_n(50, 0);
            match field {
                0 => bad.iterations = 0,
                1 => bad.sample_gap = 0,
                _ => bad.restarts = 0,
            }
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn collected_matches_enumeration() {
        for (s, burn, g) in [(30, 0, 1), (30, 7, 4), (100, 33, 10), (11, 6, 1), (9, 3, 3)] {
            let cfg = EMConfig {
                sampling_steps: s,
                burn_steps: burn,
                sample_gap: g,
                ..EMConfig::for_n(10, 0)
            };
            let brute = (1..=s).filter(|j| *j > burn && j % g == 0).count();
            assert_eq!(cfg.collected_samples(), brute);
        }
    }

    #[test]
    fn overrides_apply() {
        let o = EmOverrides {
            restarts: Some(3),
            non_cumulative: true,
            ..Default::default()
        };
        let cfg = o.resolve(100, 4);
        assert_eq!(cfg.restarts, 3);
        assert!(cfg.non_cumulative);
        assert_eq!(cfg.burn_steps, 100);
    }
}
