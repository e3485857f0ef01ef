//! Linear regression when the labels have been shuffled by an unknown
//! permutation.
//!
//! The estimators treat the permutation as a latent variable and run EM:
//! hard EM keeps only the most likely permutation at each step, stochastic EM
//! averages permutations sampled by Metropolis-Hastings. Around them sit the
//! pieces needed to reproduce the comparison studies: synthetic data,
//! real-data ingestion and grouping, and experiment drivers that emit CSV
//! reports.

pub mod data_io;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod groups;
pub mod linalg;
pub mod permutation;
pub mod rng;
pub mod synthetic;

pub use error::{Error, ErrorCategory, Result};
pub use estimators::{
    fit_hard_em, fit_hard_em_grouped, fit_ols_baseline, fit_stochastic_em,
    fit_stochastic_em_grouped, EMConfig, EmOverrides, FitResult, GroupedDataset,
    PermutationEstimate, TraceEntry,
};
pub use groups::Groups;
pub use linalg::{independent_columns, ols_fit, residual_ss, DesignMatrix, LeastSquares, RegressionFit};
pub use permutation::{best_permutation, ChainState, Permutation, SoftPermutation};
