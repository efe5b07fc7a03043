//! Performance-counter snapshot consumed by the preselection classifier.
//!
//! Vector layout for a platform with `C` clusters and `P` PEs:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | estimated input data rate (Mbps) |
//! | 1 .. 1+C | per-cluster wait until its earliest PE is free (ns) |
//! | 1+C .. 1+C+P | per-PE wait until free (ns) |
//! | 1+C+P .. 1+C+2P | per-PE utilization over the rate-register span |
//! | 1+C+2P .. +6 | next ready task: type, depth, application, critical predecessor type, its cluster, inbound comm cost (ns) |
//! | .. +C | next ready task exec time per cluster (ns, 0 if unsupported) |
//! | .. +C | next ready task power per cluster (mW, 0 if unsupported) |
//!
//! Task fields are -1 (ids) or 0 (quantities) when the ready queue is empty.
//! The default 19-PE platform yields 1 + 6 + 38 + 6 + 12 = 63 counters.

use crate::platform::{ClusterId, Platform};
use crate::schedulers::LutPolicy;
use crate::workload::{TaskId, TaskInstance};

const TASK_SCALARS: [&str; 6] = [
    "task_type",
    "task_depth",
    "app_type",
    "pred_task_type",
    "pred_cluster",
    "comm_cost_ns",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    names: Vec<String>,
    n_clusters: usize,
    n_pes: usize,
}

impl FeatureLayout {
    pub const RATE: usize = 0;

    pub fn for_platform(platform: &Platform) -> Self {
        let mut names = vec!["rate_mbps".to_string()];
        names.extend(platform.clusters.iter().map(|c| format!("wait_cluster_{}", c.name)));
        names.extend(platform.pes.iter().map(|p| format!("wait_pe_{}", p.id)));
        names.extend(platform.pes.iter().map(|p| format!("util_pe_{}", p.id)));
        names.extend(TASK_SCALARS.iter().map(|s| s.to_string()));
        names.extend(platform.clusters.iter().map(|c| format!("exec_{}", c.name)));
        names.extend(platform.clusters.iter().map(|c| format!("power_{}", c.name)));
        FeatureLayout {
            names,
            n_clusters: platform.clusters.len(),
            n_pes: platform.pes.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cluster_wait(&self, cluster: ClusterId) -> usize {
        1 + cluster
    }

    pub fn pe_wait(&self, pe: usize) -> usize {
        1 + self.n_clusters + pe
    }

    pub fn pe_util(&self, pe: usize) -> usize {
        1 + self.n_clusters + self.n_pes + pe
    }

    fn task_base(&self) -> usize {
        1 + self.n_clusters + 2 * self.n_pes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskFeatures {
    pub task_type: usize,
    pub depth: u32,
    pub app_type: usize,
    pub pred_task_type: Option<usize>,
    pub pred_cluster: Option<ClusterId>,
    pub comm_cost_ns: f64,
    pub exec_ns: Vec<f64>,
    pub power_mw: Vec<f64>,
}

/// State of the system as seen by the classifier at `snapshot_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSnapshot {
    pub snapshot_time: f64,
    pub rate_mbps: f64,
    /// Absolute earliest time each cluster has a free PE (>= snapshot time).
    pub cluster_ready: Vec<f64>,
    /// Absolute earliest time each PE is free (>= snapshot time).
    pub pe_ready: Vec<f64>,
    pub pe_utilization: Vec<f64>,
    pub task: Option<TaskFeatures>,
}

/// Inputs needed to capture a snapshot, borrowed from the engine.
pub struct CaptureInput<'a> {
    pub platform: &'a Platform,
    pub lut: &'a LutPolicy,
    pub now: f64,
    pub rate_mbps: f64,
    pub busy: &'a [f64],
    /// Per-PE committed (start, finish) intervals in time order.
    pub intervals: &'a [Vec<(f64, f64)>],
    pub util_window_ns: f64,
    pub tasks: &'a [TaskInstance],
    pub head: Option<TaskId>,
}

impl FeatureSnapshot {
    pub fn capture(input: &CaptureInput<'_>) -> Self {
        let now = input.now;
        let platform = input.platform;
        let pe_ready: Vec<f64> = input.busy.iter().map(|&b| b.max(now)).collect();
        let cluster_ready = platform
            .clusters
            .iter()
            .map(|c| c.pes.iter().map(|&p| pe_ready[p]).fold(f64::INFINITY, f64::min))
            .collect();
        let lo = now - input.util_window_ns;
        let pe_utilization = input
            .intervals
            .iter()
            .map(|iv| {
                let mut busy_ns = 0.0;
                for &(s, f) in iv.iter().rev() {
                    if f <= lo {
                        break;
                    }
                    let overlap = f.min(now) - s.max(lo);
                    if overlap > 0.0 {
                        busy_ns += overlap;
                    }
                }
                (busy_ns / input.util_window_ns).clamp(0.0, 1.0)
            })
            .collect();

        let task = input.head.map(|id| {
            let t = &input.tasks[id];
            let critical = t
                .preds
                .iter()
                .map(|&(p, _)| &input.tasks[p])
                .max_by(|a, b| a.finish_time.total_cmp(&b.finish_time).then(b.id.cmp(&a.id)));
            let target = input
                .lut
                .preferred(t.task_type)
                .or_else(|| platform.cpu_clusters().next().map(|c| c.id))
                .unwrap_or(0);
            let comm_cost_ns = t
                .preds
                .iter()
                .map(|&(p, bytes)| {
                    let src = input.tasks[p].pe.map_or(target, |pe| platform.pes[pe].cluster);
                    platform.comm_cost_clusters(src, target, bytes)
                })
                .fold(0.0, f64::max);
            TaskFeatures {
                task_type: t.task_type,
                depth: t.depth,
                app_type: t.app,
                pred_task_type: critical.map(|p| p.task_type),
                pred_cluster: critical.and_then(|p| p.pe).map(|pe| platform.pes[pe].cluster),
                comm_cost_ns,
                exec_ns: (0..platform.clusters.len())
                    .map(|c| platform.entry(t.task_type, c).map_or(0.0, |e| e.exec_ns))
                    .collect(),
                power_mw: (0..platform.clusters.len())
                    .map(|c| platform.entry(t.task_type, c).map_or(0.0, |e| e.power_mw))
                    .collect(),
            }
        });

        FeatureSnapshot {
            snapshot_time: now,
            rate_mbps: input.rate_mbps,
            cluster_ready,
            pe_ready,
            pe_utilization,
            task,
        }
    }

    /// Flattens the snapshot; times become waits relative to the snapshot.
    pub fn to_vector(&self, layout: &FeatureLayout) -> Vec<f64> {
        let mut v = Vec::with_capacity(layout.len());
        v.push(self.rate_mbps);
        v.extend(self.cluster_ready.iter().map(|&t| t - self.snapshot_time));
        v.extend(self.pe_ready.iter().map(|&t| t - self.snapshot_time));
        v.extend(&self.pe_utilization);
        debug_assert_eq!(v.len(), layout.task_base());
        match &self.task {
            Some(t) => {
                let id = |x: Option<usize>| x.map_or(-1.0, |x| x as f64);
                v.extend([
                    t.task_type as f64,
                    f64::from(t.depth),
                    t.app_type as f64,
                    id(t.pred_task_type),
                    id(t.pred_cluster),
                    t.comm_cost_ns,
                ]);
                v.extend(&t.exec_ns);
                v.extend(&t.power_mw);
            }
            None => {
                v.extend([-1.0, 0.0, -1.0, -1.0, -1.0, 0.0]);
                v.extend(std::iter::repeat_n(0.0, 2 * layout.n_clusters));
            }
        }
        debug_assert_eq!(v.len(), layout.len());
        v
    }
}
