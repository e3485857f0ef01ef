use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EmOverrides;

use super::realdata::{run_realdata, Pipeline, RealData, RealDataConfig};
use super::studies::{
    run_consistency, run_error_sweep, run_partial_shuffle, run_restart_study, ConsistencyConfig,
    ErrorSweepConfig, PartialShuffleConfig, RestartStudyConfig,
};
use super::ExperimentReport;

/// The named studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Parameter error against n, and per-dataset comparison at fixed n.
    Fig2,
    /// Spread of errors across initial label orders.
    Fig3,
    /// Error as labels are progressively swapped.
    Fig4,
    /// Grouped real-data comparison.
    Fig6,
    /// Hard EM error against its number of restarts.
    AppendixB,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig6, Preset::AppendixB];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig6 => "fig6",
            Preset::AppendixB => "appendixB",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidConfig(format!("unknown preset {s:?}; valid presets: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    /// Reduced sizes that finish in minutes.
    Desk,
    /// Full-size settings.
    Paper,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::InvalidConfig(format!("unknown scale {s:?}; valid scales: desk, paper"))),
        }
    }
}

/// One driver invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Plan {
    ErrorSweep(ErrorSweepConfig),
    Consistency(ConsistencyConfig),
    PartialShuffle(PartialShuffleConfig),
    RealData(RealDataConfig),
    RestartStudy(RestartStudyConfig),
}

impl Plan {
    pub fn name(&self) -> &str {
        match self {
            Plan::ErrorSweep(c) => &c.name,
            Plan::Consistency(c) => &c.name,
            Plan::PartialShuffle(c) => &c.name,
            Plan::RealData(c) => &c.name,
            Plan::RestartStudy(c) => &c.name,
        }
    }

    pub fn em_mut(&mut self) -> &mut EmOverrides {
        match self {
            Plan::ErrorSweep(c) => &mut c.em,
            Plan::Consistency(c) => &mut c.em,
            Plan::PartialShuffle(c) => &mut c.em,
            Plan::RealData(c) => &mut c.em,
            Plan::RestartStudy(c) => &mut c.em,
        }
    }

    /// Runs the driver. Real-data plans need `data`.
    pub fn run(&self, data: Option<&RealData>) -> Result<ExperimentReport> {
        match self {
            Plan::ErrorSweep(c) => run_error_sweep(c),
            Plan::Consistency(c) => run_consistency(c),
            Plan::PartialShuffle(c) => run_partial_shuffle(c),
            Plan::RestartStudy(c) => run_restart_study(c),
            Plan::RealData(c) => {
                let data = data.ok_or_else(|| {
                    Error::InvalidConfig(format!("experiment {:?} needs a dataset", c.name))
                })?;
                run_realdata(data, c)
            }
        }
    }
}

/// Synthetic presets take sigma = 1 unless the study states otherwise.
pub fn plans(preset: Preset, scale: Scale, seed: u64, pipeline: Pipeline) -> Vec<Plan> {
    let desk = scale == Scale::Desk;
    let em = EmOverrides::default();
    match preset {
        Preset::Fig2 => vec![
            Plan::ErrorSweep(ErrorSweepConfig {
                name: "fig2a".into(),
                n_values: if desk { vec![100, 200] } else { (1..=10).map(|k| 100 * k).collect() },
                d: if desk { 10 } else { 30 },
                sigma: 1.0,
                trials: if desk { 5 } else { 10 },
                shuffle: true,
                seed,
                em: em.clone(),
            }),
            Plan::ErrorSweep(ErrorSweepConfig {
                name: "fig2b".into(),
                n_values: vec![if desk { 200 } else { 500 }],
                d: if desk { 15 } else { 30 },
                sigma: 1.0,
                trials: if desk { 20 } else { 50 },
                shuffle: true,
                seed,
                em,
            }),
        ],
        Preset::Fig3 => vec![Plan::Consistency(ConsistencyConfig::with_reorderings(
            "fig3", 250, 20, 1.0, seed, 25,
        ))],
        Preset::Fig4 => vec![Plan::PartialShuffle(PartialShuffleConfig {
            name: "fig4".into(),
            n: 200,
            d: 20,
            sigma: 0.3,
            max_swaps: if desk { 30 } else { 200 },
            stride: 5,
            series: 5,
            seed,
            em,
        })],
        Preset::Fig6 => vec![Plan::RealData(RealDataConfig {
            name: "fig6".into(),
            pipeline,
            group_counts: vec![3, 4],
            crossbin_fraction: match pipeline {
                Pipeline::LabelGrouped => 0.01,
                Pipeline::FeatureGrouped => 0.0,
            },
            test_fraction: 0.2,
            seeds: (0..5).map(|t| seed.wrapping_add(t)).collect(),
            em,
        })],
        Preset::AppendixB => vec![Plan::RestartStudy(RestartStudyConfig {
            name: "appendixB".into(),
            n: 100,
            d_values: if desk { vec![2, 20] } else { vec![2, 5, 10, 20] },
            restart_counts: if desk {
                vec![1, 10, 100, 1000]
            } else {
                vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
            },
            sigma: 0.3,
            trials: if desk { 3 } else { 5 },
            seed,
            em,
        })],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let err = "fig9".parse::<Preset>().unwrap_err().to_string();
        assert!(err.contains("fig2") && err.contains("appendixB"), "{err}");
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn desk_presets_stay_small() {
        for p in Preset::ALL {
            for plan in plans(p, Scale::Desk, 1, Pipeline::FeatureGrouped) {
                let json = serde_json::to_value(&plan).unwrap();
                let text = json.to_string();
                assert!(!text.contains("\"n\":1000"), "{text}");
            }
        }
    }

    #[test]
    fn realdata_plan_needs_data() {
        let plan = plans(Preset::Fig6, Scale::Desk, 1, Pipeline::FeatureGrouped).remove(0);
        assert!(matches!(plan.run(None), Err(Error::InvalidConfig(_))));
    }
}
