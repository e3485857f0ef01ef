use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{
    featurize_kmers, group_by_key, kmer_names, normalize_labels, split_train_test, NumericTable, SequenceTable,
};
use crate::error::{Error, Result};
use crate::estimators::{fit_hard_em_grouped, fit_ols_baseline, fit_stochastic_em_grouped, EmOverrides, GroupedDataset};
use crate::linalg::{independent_columns, DesignMatrix};
use crate::synthetic::grouped_shuffle;

use super::{mean_squared_error, method, timed, ExperimentReport, TrialRow, TEST_MSE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Rows binned by the value of one feature column (housing-style).
    FeatureGrouped,
    /// Rows binned by their label; features are k-mer counts (sequence-style).
    LabelGrouped,
}

/// A real dataset ready for the grouped comparison: labels scaled to
/// `[0, 1]` and a key that rows are binned by.
#[derive(Debug, Clone, PartialEq)]
pub struct RealData {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub key: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Preprocessing choices, for the run manifest.
    pub choices: BTreeMap<String, String>,
}

/// Label column `label`, bins by feature `group_feature`.
pub fn prepare_feature_grouped(
    table: &NumericTable,
    label: &str,
    group_feature: &str,
    intercept: bool,
) -> Result<RealData> {
    if label == group_feature {
        return Err(Error::InvalidConfig(format!(
            "grouping column {group_feature:?} is the label; use the label-grouped pipeline"
        )));
    }
    let data = table.labeled(label, intercept)?;
    let key = table.column(table.column_index(group_feature)?);
    let (y, scaling) = normalize_labels(&data.y)?;
    let mut choices = BTreeMap::new();
    choices.insert("label".into(), label.into());
    choices.insert("group_feature".into(), group_feature.into());
    choices.insert("intercept".into(), intercept.to_string());
    choices.insert("label_min".into(), scaling.min.to_string());
    choices.insert("label_max".into(), scaling.max.to_string());
    choices.insert("features_normalized".into(), "false".into());
    Ok(RealData {
        x: data.x,
        y,
        key,
        feature_names: data.feature_names,
        choices,
    })
}

/// k-mer counts for `k = 1..=max_k`, binned by label. Columns that are linear
/// combinations of earlier ones are dropped (with equal-length sequences the
/// counts of each length sum to a constant).
pub fn prepare_label_grouped(table: &SequenceTable, max_k: usize, intercept: bool) -> Result<RealData> {
    let mut x = featurize_kmers(&table.sequences, max_k)?;
    let mut names = kmer_names(max_k);
    if intercept {
        x = x.with_intercept();
        names.push(crate::data_io::INTERCEPT_COLUMN.into());
    }
    let keep = independent_columns(&x);
    let dropped: Vec<&str> = (0..names.len())
        .filter(|j| !keep.contains(j))
        .map(|j| names[j].as_str())
        .collect();
    let mut choices = BTreeMap::new();
    choices.insert("max_k".into(), max_k.to_string());
    choices.insert("intercept".into(), intercept.to_string());
    choices.insert("dropped_columns".into(), dropped.join(" "));
    choices.insert("features_normalized".into(), "false".into());
    let x = x.select_columns(&keep)?;
    let feature_names = keep.iter().map(|&j| names[j].clone()).collect();
    let (y, scaling) = normalize_labels(&table.labels)?;
    choices.insert("label_min".into(), scaling.min.to_string());
    choices.insert("label_max".into(), scaling.max.to_string());
    Ok(RealData {
        x,
        key: y.clone(),
        y,
        feature_names,
        choices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataConfig {
    pub name: String,
    pub pipeline: Pipeline,
    /// Each value of G is run with every seed.
    pub group_counts: Vec<usize>,
    pub crossbin_fraction: f64,
    pub test_fraction: f64,
    /// One trial per seed; the seed drives the split, the shuffle and the estimators.
    pub seeds: Vec<u64>,
    pub em: EmOverrides,
}

/// Test MSE of four arms per trial: OLS on the shuffled training labels
/// (negative control), grouped hard EM, grouped stochastic EM, and OLS on the
/// true training labels (positive control). All arms share the split.
pub fn run_realdata(data: &RealData, cfg: &RealDataConfig) -> Result<ExperimentReport> {
    let jobs: Vec<(usize, usize)> = cfg
        .group_counts
        .iter()
        .flat_map(|&g| (0..cfg.seeds.len()).map(move |t| (g, t)))
        .collect();
    let parts: Result<Vec<Vec<TrialRow>>> = jobs
        .into_par_iter()
        .map(|(g, trial)| {
            let seed = cfg.seeds[trial];
            let grouped = group_by_key(&data.x, &data.y, &data.key, g)?;
            let split = split_train_test(&grouped, cfg.test_fraction, seed)?;
            let train = &split.train;
            let shuffled = grouped_shuffle(&train.y, &train.groups, cfg.crossbin_fraction, seed)?;
            let observed = GroupedDataset::new(train.x.clone(), shuffled.labels, train.groups.clone())?;
            let em = cfg.em.resolve(train.n(), seed);

            let (negative, neg_ms) = timed(|| fit_ols_baseline(&observed.x, &observed.y))?;
            let (hard, hard_ms) = timed(|| fit_hard_em_grouped(&observed, &em))?;
            let (soft, soft_ms) = timed(|| fit_stochastic_em_grouped(&observed, &em))?;
            let (positive, pos_ms) = timed(|| fit_ols_baseline(&train.x, &train.y))?;

            [
                (method::NEGATIVE_CONTROL, &negative, neg_ms),
                (method::HARD_EM, &hard, hard_ms),
                (method::STOCHASTIC_EM, &soft, soft_ms),
                (method::POSITIVE_CONTROL, &positive, pos_ms),
            ]
            .into_iter()
            .map(|(name, fit, ms)| {
                Ok(TrialRow {
                    experiment: cfg.name.clone(),
                    method: name.into(),
                    n: data.x.rows(),
                    d: data.x.cols(),
                    sigma: None,
                    groups: g,
                    seed,
                    trial,
                    metric_name: TEST_MSE.into(),
                    metric_value: mean_squared_error(&split.test_x, &fit.weights, &split.test_y)?,
                    wall_ms: ms,
                })
            })
            .collect()
        })
        .collect();
    Ok(ExperimentReport::new(&cfg.name, cfg, parts?.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::read_numeric_csv;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn housing_like(dir: &tempfile::TempDir, n: usize) -> NumericTable {
        let mut r = rng::stream(12, 0);
        let mut text = String::from("a,b,price,target\n");
        for _ in 0..n {
            let a: f64 = r.sample(StandardNormal);
            let b: f64 = r.sample(StandardNormal);
            let price: f64 = r.sample(StandardNormal);
            let e: f64 = r.sample(StandardNormal);
            text += &format!("{a},{b},{price},{}\n", 2.0 * a - b + 0.5 * price + 0.1 * e + 3.0);
        }
        let p = dir.path().join("h.csv");
        std::fs::write(&p, text).unwrap();
        read_numeric_csv(&p).unwrap()
    }

    fn config(groups: usize) -> RealDataConfig {
        RealDataConfig {
            name: "real".into(),
            pipeline: Pipeline::FeatureGrouped,
            group_counts: vec![groups],
            crossbin_fraction: 0.0,
            test_fraction: 0.2,
            seeds: vec![1, 2],
            em: EmOverrides {
                iterations: Some(5),
                restarts: Some(4),
                ..Default::default()
            },
        }
    }

    #[test]
    fn four_arms_per_trial() {
        let dir = tempfile::tempdir().unwrap();
        let data = prepare_feature_grouped(&housing_like(&dir, 60), "target", "price", true).unwrap();
        assert_eq!(data.x.cols(), 4);
        assert!(data.y.iter().all(|v| (0.0..=1.0).contains(v)));
        let rep = run_realdata(&data, &config(3)).unwrap();
        assert_eq!(rep.rows.len(), 2 * 4);
        let pos = rep.values(method::POSITIVE_CONTROL, TEST_MSE);
        let neg = rep.values(method::NEGATIVE_CONTROL, TEST_MSE);
        assert!(pos.iter().zip(&neg).all(|(p, n)| p <= n));
    }

    #[test]
    fn singleton_groups_make_all_arms_equal() {
        let dir = tempfile::tempdir().unwrap();
        let data = prepare_feature_grouped(&housing_like(&dir, 40), "target", "price", false).unwrap();
        let rep = run_realdata(&data, &config(40)).unwrap();
        for chunk in rep.rows.chunks(4) {
            for r in chunk {
                assert!((r.metric_value - chunk[0].metric_value).abs() < 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn label_column_cannot_be_group_key() {
        let dir = tempfile::tempdir().unwrap();
        let t = housing_like(&dir, 10);
        assert!(prepare_feature_grouped(&t, "target", "target", false).is_err());
        assert!(prepare_feature_grouped(&t, "target", "nope", false).is_err());
    }

    #[test]
    fn kmer_pipeline_drops_dependent_columns() {
        let mut r = rng::stream(5, 0);
        let sequences: Vec<String> = (0..120)
            .map(|_| (0..12).map(|_| ['A', 'C', 'G', 'T'][r.random_range(0..4)]).collect())
            .collect();
        let labels: Vec<f64> = sequences
            .iter()
            .map(|s| s.matches("GG").count() as f64 + 0.1 * r.sample::<f64, _>(StandardNormal))
            .collect();
        let table = SequenceTable {
            source: "mem".into(),
            sequences,
            labels,
        };
        let data = prepare_label_grouped(&table, 2, false).unwrap();
        assert!(data.x.cols() < 20);
        assert_eq!(data.key, data.y);
        crate::linalg::LeastSquares::new(&data.x).unwrap();
        let mut cfg = config(3);
        cfg.pipeline = Pipeline::LabelGrouped;
        cfg.crossbin_fraction = 0.01;
        assert_eq!(run_realdata(&data, &cfg).unwrap().rows.len(), 8);
    }
}
