//! Oracle labeling of counter snapshots.
//!
//! Each scenario runs twice. The first run follows the fast path and, at every
//! invocation, asks the slow path where it would put the head task. When both
//! pick the same cluster the snapshot is labeled fast; otherwise the label is
//! left pending. The second run follows the slow path throughout. Pending
//! labels then resolve to whichever run scored better on the target metric.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{Label, TrainingSample};
use crate::engine::{run, run_with_probe, EngineConfig, Invocation, Probe};
use crate::error::{ClassifierError, SimError};
use crate::metrics::{reduce, Metrics};
use crate::platform::Platform;
use crate::schedulers::{etf_schedule, Policy, SchedContext};
use crate::workload::{AppLibrary, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMetric {
    /// Mean job execution time.
    #[default]
    Exec,
    /// Energy-delay product.
    Edp,
}

impl TargetMetric {
    pub fn score(self, m: &Metrics) -> f64 {
        match self {
            TargetMetric::Exec => m.avg_job_exec_ns,
            TargetMetric::Edp => m.edp,
        }
    }
}

impl FromStr for TargetMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exec" => Ok(TargetMetric::Exec),
            "edp" => Ok(TargetMetric::Edp),
            other => Err(format!("unknown metric `{other}` (expected exec or edp)")),
        }
    }
}

/// What counts as the fast and slow paths agreeing on the head task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    /// Same processing element.
    #[default]
    Pe,
    /// Same cluster, whichever PE inside it.
    Cluster,
}

impl FromStr for Agreement {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pe" => Ok(Agreement::Pe),
            "cluster" => Ok(Agreement::Cluster),
            other => Err(format!("unknown agreement level `{other}` (expected pe or cluster)")),
        }
    }
}

/// Labeled samples of one scenario plus the two runs they were derived from.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub samples: Vec<TrainingSample>,
    pub fast: Metrics,
    pub slow: Metrics,
    /// Number of snapshots whose label was pending before resolution.
    pub pending: usize,
    /// Label the pending snapshots resolved to.
    pub resolved_to: Label,
}

struct AgreementProbe {
    level: Agreement,
    samples: Vec<(Vec<f64>, bool)>,
}

impl Probe for AgreementProbe {
    fn on_invocation(&mut self, inv: &Invocation<'_>) -> Result<(), SimError> {
        let head = inv.decisions[0];
        let ctx = SchedContext {
            release: inv.now + inv.overhead.slow_latency(inv.ready.len()),
            ..inv.ctx
        };
        let slow = etf_schedule(&ctx, inv.ready)?;
        let slow_pe = slow
            .iter()
            .find(|d| d.task == head.task)
            .expect("slow path places every ready task")
            .pe;
        let pes = &inv.ctx.platform.pes;
        let agree = match self.level {
            Agreement::Pe => slow_pe == head.pe,
            Agreement::Cluster => pes[slow_pe].cluster == pes[head.pe].cluster,
        };
        self.samples.push((inv.features.to_vec(), agree));
        Ok(())
    }
}

/// Labels every scheduler invocation of `scenario`. `index` identifies the
/// scenario in the emitted samples.
pub fn label_scenario(
    platform: &Platform,
    library: &AppLibrary,
    scenario: &Scenario,
    index: usize,
    config: &EngineConfig,
    metric: TargetMetric,
    level: Agreement,
) -> Result<OracleOutcome, ClassifierError> {
    let stage = |stage: &'static str| move |e: SimError| ClassifierError::Stage {
        stage,
        source: Box::new(e),
    };
    let mut probe = AgreementProbe {
        level,
        samples: Vec::new(),
    };
    let fast_trace = run_with_probe(platform, library, scenario, &Policy::Lut, config, &mut probe)
        .map_err(stage("fast-path run"))?;
    let slow_trace =
        run(platform, library, scenario, &Policy::Etf, config).map_err(stage("slow-path run"))?;
    let fast = reduce(&fast_trace).map_err(|e| stage("fast-path run")(e.into()))?;
    let slow = reduce(&slow_trace).map_err(|e| stage("slow-path run")(e.into()))?;
    let resolved_to = if metric.score(&slow) < metric.score(&fast) {
        Label::Slow
    } else {
        Label::Fast
    };
    let mut pending = 0;
    let samples = probe
        .samples
        .into_iter()
        .enumerate()
        .map(|(decision, (features, agree))| {
            let label = if agree {
                Label::Fast
            } else {
                pending += 1;
                resolved_to
            };
            TrainingSample {
                scenario: index,
                workload: scenario.workload,
                rate_mbps: scenario.data_rate_mbps,
                decision,
                features,
                label,
            }
        })
        .collect();
    Ok(OracleOutcome {
        samples,
        fast,
        slow,
        pending,
        resolved_to,
    })
}
