//! Oracle labeling, feature ranking and decision-tree training for the
//! runtime path selector.

pub mod dataset;
pub mod oracle;
pub mod train;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use dataset::{accuracy, read_samples, split_by_scenario, write_samples, Label, TrainingSample};
pub use oracle::{label_scenario, Agreement, OracleOutcome, TargetMetric};
pub use train::{rank_features, train_tree, RANKING_DEPTH};
pub use tree::{DecisionTree, TreeNode, TREE_SCHEMA_VERSION};

use crate::engine::{EngineConfig, FeatureLayout};
use crate::error::ClassifierError;
use crate::platform::Platform;
use crate::schedulers::{fit_threshold, RatePoint};
use crate::sweep::par_map;
use crate::workload::{AppLibrary, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub metric: TargetMetric,
    pub agreement: Agreement,
    pub max_depth: usize,
    /// Number of top-ranked features the tree may use.
    pub top_k: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            metric: TargetMetric::Exec,
            agreement: Agreement::Pe,
            max_depth: 2,
            top_k: 2,
            train_fraction: 0.7,
            split_seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub feature_names: Vec<String>,
    pub samples: Vec<TrainingSample>,
    pub outcomes: Vec<OracleOutcome>,
    pub train_len: usize,
    pub test_len: usize,
    pub ranking: Vec<(usize, f64)>,
    pub selected: Vec<usize>,
    pub tree: DecisionTree,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Rate threshold fitted on the training scenarios, if any rate favors
    /// the slow path.
    pub threshold_mbps: Option<f64>,
}

/// Labels every scenario with the oracle, in parallel when enabled.
pub fn label_all(
    platform: &Platform,
    library: &AppLibrary,
    scenarios: &[Scenario],
    config: &EngineConfig,
    metric: TargetMetric,
    agreement: Agreement,
) -> Result<Vec<OracleOutcome>, ClassifierError> {
    let indexed: Vec<(usize, &Scenario)> = scenarios.iter().enumerate().collect();
    par_map(&indexed, |&(i, s)| {
        label_scenario(platform, library, s, i, config, metric, agreement)
    })
    .into_iter()
    .collect()
}

/// Oracle labeling, scenario split, ranking, feature selection, training and
/// held-out evaluation in one call.
pub fn run_pipeline(
    platform: &Platform,
    library: &AppLibrary,
    scenarios: &[Scenario],
    engine: &EngineConfig,
    config: &PipelineConfig,
) -> Result<PipelineReport, ClassifierError> {
    let outcomes = label_all(platform, library, scenarios, engine, config.metric, config.agreement)?;
    let samples: Vec<TrainingSample> =
        outcomes.iter().flat_map(|o| o.samples.iter().cloned()).collect();
    let feature_names = FeatureLayout::for_platform(platform).names().to_vec();
    let (train, test) = split_by_scenario(&samples, config.train_fraction, config.split_seed);
    let ranking = rank_features(&train)?;
    let selected: Vec<usize> = ranking.iter().take(config.top_k).map(|&(f, _)| f).collect();
    let tree = train_tree(&train, config.max_depth, &selected, &feature_names)?;
    let train_accuracy = accuracy(&tree, &train)?;
    let test_accuracy = accuracy(&tree, &test)?;
    let train_scenarios: std::collections::HashSet<usize> =
        train.iter().map(|s| s.scenario).collect();
    let points: Vec<RatePoint> = outcomes
        .iter()
        .enumerate()
        .filter(|(i, _)| train_scenarios.contains(i))
        .map(|(i, o)| RatePoint {
            rate_mbps: scenarios[i].data_rate_mbps,
            lut_exec_ns: o.fast.avg_job_exec_ns,
            etf_exec_ns: o.slow.avg_job_exec_ns,
        })
        .collect();
    Ok(PipelineReport {
        feature_names,
        train_len: train.len(),
        test_len: test.len(),
        samples,
        outcomes,
        ranking,
        selected,
        tree,
        train_accuracy,
        test_accuracy,
        threshold_mbps: fit_threshold(&points),
    })
}
