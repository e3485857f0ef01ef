//! Experiment drivers that compare the estimators and write tidy CSV reports.
//!
//! Each driver returns an [`ExperimentReport`]: one row per (trial, method,
//! metric) with the seed that reproduces it. Aggregates (mean and sample
//! standard deviation over trials) are computed from those rows. Trials run in
//! parallel; rows are always assembled in trial order, so reports do not
//! depend on the thread count.
//!
//! The per-trial CSV has columns
//! `experiment,method,n,d,sigma,G,seed,trial,metric_name,metric_value,wall_ms`.
//! Curves are encoded in the metric name (`param_error@iter=3`,
//! `param_error@swaps=10`, `param_error@restarts=100`), which keeps one point
//! per row for plotting tools. `wall_ms` is left empty unless timing is
//! requested, since it would make reruns differ.

mod presets;
mod realdata;
mod studies;

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use presets::{plans, Plan, Preset, Scale};
pub use realdata::{
    prepare_feature_grouped, prepare_label_grouped, run_realdata, Pipeline, RealData, RealDataConfig,
};
pub use studies::{
    run_consistency, run_error_sweep, run_partial_shuffle, run_restart_study, ConsistencyConfig,
    ErrorSweepConfig, PartialShuffleConfig, RestartStudyConfig,
};

use crate::data_io::write_csv;
use crate::error::Result;
use crate::linalg::{residual_ss, DesignMatrix};

pub mod method {
    pub const OLS: &str = "ols";
    pub const HARD_EM: &str = "hard_em";
    pub const STOCHASTIC_EM: &str = "stochastic_em";
    pub const NEGATIVE_CONTROL: &str = "negative_control";
    pub const POSITIVE_CONTROL: &str = "positive_control";
}

pub const PARAM_ERROR: &str = "param_error";
pub const TEST_MSE: &str = "test_mse";

pub const TRIAL_HEADER: [&str; 11] = [
    "experiment",
    "method",
    "n",
    "d",
    "sigma",
    "G",
    "seed",
    "trial",
    "metric_name",
    "metric_value",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 10] = [
    "experiment",
    "method",
    "n",
    "d",
    "sigma",
    "G",
    "metric_name",
    "count",
    "mean",
    "std",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub d: usize,
    /// Noise level of synthetic data; `None` for real data.
    pub sigma: Option<f64>,
    pub groups: usize,
    pub seed: u64,
    pub trial: usize,
    pub metric_name: String,
    pub metric_value: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub sigma: Option<f64>,
    pub groups: usize,
    pub metric_name: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std: f64,
}

/// (method, n, d, sigma bits, G, metric)
type GroupKey = (String, usize, usize, Option<u64>, usize, String);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// The driver configuration, echoed for reproducibility.
    pub config: serde_json::Value,
    pub rows: Vec<TrialRow>,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, config: &C, rows: Vec<TrialRow>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            config: serde_json::to_value(config).expect("config serializes to JSON"),
            rows,
        }
    }

    /// Rows of one method and metric, in report order.
    pub fn values(&self, method: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.metric_name == metric)
            .map(|r| r.metric_value)
            .collect()
    }

    /// Mean and sample standard deviation per (method, n, d, sigma, G, metric),
    /// in order of first appearance.
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        let mut index: HashMap<GroupKey, usize> = HashMap::new();
        let mut buckets: Vec<(&TrialRow, Vec<f64>)> = Vec::new();
        for row in &self.rows {
            let key = (
                row.method.clone(),
                row.n,
                row.d,
                row.sigma.map(f64::to_bits),
                row.groups,
                row.metric_name.clone(),
            );
            let slot = *index.entry(key).or_insert_with(|| {
                buckets.push((row, Vec::new()));
                buckets.len() - 1
            });
            buckets[slot].1.push(row.metric_value);
        }
        buckets
            .into_iter()
            .map(|(row, values)| {
                let (mean, std) = mean_std(&values);
                AggregateRow {
                    experiment: row.experiment.clone(),
                    method: row.method.clone(),
                    n: row.n,
                    d: row.d,
                    sigma: row.sigma,
                    groups: row.groups,
                    metric_name: row.metric_name.clone(),
                    count: values.len(),
                    mean,
                    std,
                }
            })
            .collect()
    }

    pub fn write_trials_csv(&self, path: impl AsRef<Path>, timing: bool) -> Result<()> {
        write_trials_csv(path, std::slice::from_ref(self), timing)
    }

    pub fn write_aggregates_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_aggregates_csv(path, std::slice::from_ref(self))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |s| s.to_string())
}

/// Writes the per-trial rows of several reports into one file.
pub fn write_trials_csv(path: impl AsRef<Path>, reports: &[ExperimentReport], timing: bool) -> Result<()> {
    let rows = reports.iter().flat_map(|rep| &rep.rows).map(|r| {
        vec![
            r.experiment.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.d.to_string(),
            opt(r.sigma),
            r.groups.to_string(),
            r.seed.to_string(),
            r.trial.to_string(),
            r.metric_name.clone(),
            r.metric_value.to_string(),
            if timing { format!("{:.3}", r.wall_ms) } else { String::new() },
        ]
    });
    write_csv(path, &TRIAL_HEADER, rows)
}

pub fn write_aggregates_csv(path: impl AsRef<Path>, reports: &[ExperimentReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|rep| rep.aggregates()).map(|a| {
        vec![
            a.experiment,
            a.method,
            a.n.to_string(),
            a.d.to_string(),
            opt(a.sigma),
            a.groups.to_string(),
            a.metric_name,
            a.count.to_string(),
            a.mean.to_string(),
            a.std.to_string(),
        ]
    });
    write_csv(path, &AGGREGATE_HEADER, rows)
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 when `n < 2`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean squared prediction error `||X w - y||^2 / n`.
pub fn mean_squared_error(x: &DesignMatrix, w: &[f64], y: &[f64]) -> Result<f64> {
    Ok(residual_ss(x, w, y)? / y.len() as f64)
}

pub(crate) fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64() * 1e3))
}
