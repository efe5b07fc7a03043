//! The policy set: LUT (fast), ETF (slow), ETF-ideal, the classifier-switched
//! DAS policy and the data-rate threshold baseline.

mod etf;
mod lut;
mod threshold;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::DecisionTree;
use crate::platform::{Platform, PeId};
use crate::workload::{TaskId, TaskInstance};

pub use etf::etf_schedule;
pub use lut::LutPolicy;
pub use threshold::{fit_threshold, threshold_path, RatePoint};

/// Which scheduler produced a decision, and the classifier's label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyTag {
    #[serde(rename = "F")]
    Fast,
    #[serde(rename = "S")]
    Slow,
}

impl fmt::Display for PolicyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyTag::Fast => "F",
            PolicyTag::Slow => "S",
        })
    }
}

impl FromStr for PolicyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(PolicyTag::Fast),
            "S" => Ok(PolicyTag::Slow),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub task: TaskId,
    pub pe: PeId,
    pub start: f64,
    pub finish: f64,
    pub tag: PolicyTag,
}

/// Read-only view of the simulator state handed to a scheduler invocation.
#[derive(Debug, Clone, Copy)]
pub struct SchedContext<'a> {
    pub platform: &'a Platform,
    pub tasks: &'a [TaskInstance],
    /// Per-PE time at which its last committed task finishes.
    pub busy: &'a [f64],
    /// Earliest time any assignment made by this invocation may start.
    pub release: f64,
}

impl SchedContext<'_> {
    /// Time at which all of `task`'s inputs are available on a PE of
    /// `cluster`: ready time plus the largest inbound transfer.
    pub fn data_ready(&self, task: &TaskInstance, cluster: usize) -> f64 {
        let comm = task
            .preds
            .iter()
            .map(|&(p, bytes)| {
                let src = self.tasks[p].pe.expect("ready task has placed predecessors");
                self.platform
                    .comm_cost_clusters(self.platform.pes[src].cluster, cluster, bytes)
            })
            .fold(0.0, f64::max);
        task.ready_time + comm
    }
}

/// Predicted (start, finish) of `task` on `pe` given per-PE `busy` times, or
/// `None` when the PE cannot run the task type.
pub fn finish_time(
    ctx: &SchedContext<'_>,
    busy: &[f64],
    task: TaskId,
    pe: PeId,
) -> Option<(f64, f64)> {
    let t = &ctx.tasks[task];
    let cluster = ctx.platform.pes[pe].cluster;
    let exec = ctx.platform.exec_time(t.task_type, cluster)?;
    let start = busy[pe].max(ctx.data_ready(t, cluster)).max(ctx.release);
    Some((start, start + exec))
}

/// A fully resolved scheduling policy.
#[derive(Debug, Clone)]
pub enum Policy {
    Lut,
    Etf,
    EtfIdeal,
    Das(Arc<DecisionTree>),
    /// Fast path below the threshold rate (Mbps), slow path at or above it.
    Threshold(f64),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Lut => "lut",
            Policy::Etf => "etf",
            Policy::EtfIdeal => "etf-ideal",
            Policy::Das(_) => "das",
            Policy::Threshold(_) => "threshold",
        }
    }

    /// Whether the policy reads the performance-counter snapshot.
    pub fn needs_counters(&self) -> bool {
        matches!(self, Policy::Das(_) | Policy::Threshold(_))
    }
}

/// Policy as named on the command line; `das:` still refers to a tree file.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Lut,
    Etf,
    EtfIdeal,
    Das(PathBuf),
    Threshold(f64),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lut" => Ok(PolicySpec::Lut),
            "etf" => Ok(PolicySpec::Etf),
            "etf-ideal" => Ok(PolicySpec::EtfIdeal),
            "das" => Err("policy `das` needs a tree file: das:<tree-file>".to_string()),
            _ => {
                if let Some(path) = s.strip_prefix("das:") {
                    if path.is_empty() {
                        return Err("policy `das` needs a tree file: das:<tree-file>".to_string());
                    }
                    Ok(PolicySpec::Das(PathBuf::from(path)))
                } else if let Some(theta) = s.strip_prefix("threshold:") {
                    let v: f64 = theta
                        .parse()
                        .map_err(|_| format!("invalid threshold `{theta}`"))?;
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(format!("threshold must be a non-negative rate, got {v}"));
                    }
                    Ok(PolicySpec::Threshold(v))
                } else {
                    Err(format!(
                        "unknown policy `{s}` (expected lut|etf|etf-ideal|das:<tree-file>|threshold:<mbps>)"
                    ))
                }
            }
        }
    }
}

impl PolicySpec {
    pub fn resolve(&self) -> Result<Policy, crate::error::ClassifierError> {
        Ok(match self {
            PolicySpec::Lut => Policy::Lut,
            PolicySpec::Etf => Policy::Etf,
            PolicySpec::EtfIdeal => Policy::EtfIdeal,
            PolicySpec::Das(path) => Policy::Das(Arc::new(DecisionTree::load(path)?)),
            PolicySpec::Threshold(t) => Policy::Threshold(*t),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_flags_parse() {
        assert_eq!("lut".parse(), Ok(PolicySpec::Lut));
        assert_eq!("etf-ideal".parse(), Ok(PolicySpec::EtfIdeal));
        assert_eq!(
            "das:tree.toml".parse(),
            Ok(PolicySpec::Das(PathBuf::from("tree.toml")))
        );
        assert_eq!("threshold:1352".parse(), Ok(PolicySpec::Threshold(1352.0)));
        assert!("das".parse::<PolicySpec>().is_err());
        assert!("das:".parse::<PolicySpec>().is_err());
        assert!("threshold:abc".parse::<PolicySpec>().is_err());
        assert!("cfs".parse::<PolicySpec>().is_err());
    }
}
