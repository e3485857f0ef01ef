//! Fixtures shared by the benchmarks.

use shufreg::synthetic::{generate, ShuffleMode, SyntheticSpec};
use shufreg::{DesignMatrix, EMConfig};

/// Fully shuffled synthetic regression problem.
pub struct Fixture {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub scores: Vec<f64>,
}

pub fn shuffled(n: usize, d: usize, sigma: f64, seed: u64) -> Fixture {
    let spec = SyntheticSpec { n, d, sigma, seed };
    let inst = generate(&spec, &ShuffleMode::Full).expect("valid fixture spec");
    let scores = inst.x.matvec(&inst.w_true).expect("shapes agree");
    Fixture {
        x: inst.x,
        y: inst.y_observed,
        scores,
    }
}

/// Default configuration with fewer iterations and restarts, for timing a
/// single fit in reasonable time.
pub fn short_config(n: usize, iterations: usize, restarts: usize) -> EMConfig {
    EMConfig {
        iterations,
        restarts,
        ..EMConfig::for_n(n, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let f = shuffled(30, 4, 1.0, 2);
        assert_eq!((f.x.rows(), f.x.cols(), f.y.len(), f.scores.len()), (30, 4, 30, 30));
        assert!(short_config(30, 3, 2).validate().is_ok());
    }
}
