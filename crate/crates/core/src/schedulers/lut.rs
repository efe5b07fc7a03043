use crate::error::SimError;
use crate::platform::{ClusterId, Platform, TaskTypeId};
use crate::schedulers::{Decision, PolicyTag, SchedContext};
use crate::workload::TaskId;

/// Constant-time table from task type to its most energy-efficient cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct LutPolicy {
    preferred: Vec<Option<ClusterId>>,
    cpu_clusters: Vec<ClusterId>,
}

impl LutPolicy {
    /// Preferred cluster per type = argmin power x exec time, ties to the
    /// lower cluster id.
    pub fn from_platform(platform: &Platform) -> Self {
        let preferred = platform
            .profiles
            .iter()
            .map(|p| {
                p.entries
                    .iter()
                    .enumerate()
                    .filter_map(|(c, e)| e.map(|e| (c, e.power_mw * e.exec_ns)))
                    .fold(None, |best: Option<(ClusterId, f64)>, (c, energy)| match best {
                        Some((_, b)) if b <= energy => best,
                        _ => Some((c, energy)),
                    })
                    .map(|(c, _)| c)
            })
            .collect();
        LutPolicy {
            preferred,
            cpu_clusters: platform.cpu_clusters().map(|c| c.id).collect(),
        }
    }

    /// Drops the table entries for `types`, so they take the CPU fallback.
    pub fn forget(mut self, types: &[TaskTypeId]) -> Self {
        for &t in types {
            if let Some(slot) = self.preferred.get_mut(t) {
                *slot = None;
            }
        }
        self
    }

    pub fn preferred(&self, task_type: TaskTypeId) -> Option<ClusterId> {
        self.preferred.get(task_type).copied().flatten()
    }

    /// Earliest-available PE of the preferred cluster, or of any CPU cluster
    /// for task types missing from the table. Ties go to the lower PE id.
    pub fn schedule(&self, ctx: &SchedContext<'_>, task: TaskId) -> Result<Decision, SimError> {
        let t = &ctx.tasks[task];
        let preferred = self.preferred(t.task_type);
        let candidates: &[ClusterId] = match &preferred {
            Some(c) => std::slice::from_ref(c),
            None => &self.cpu_clusters,
        };
        let pe = candidates
            .iter()
            .filter(|&&c| ctx.platform.supports(t.task_type, c))
            .flat_map(|&c| ctx.platform.clusters[c].pes.iter().copied())
            .map(|pe| (ctx.busy[pe].max(ctx.release), pe))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, pe)| pe)
            .ok_or(SimError::NoSchedulablePe {
                task,
                task_type: t.task_type,
            })?;
        let cluster = ctx.platform.pes[pe].cluster;
        let exec = ctx
            .platform
            .exec_time(t.task_type, cluster)
            .expect("candidate cluster supports the task type");
        let start = ctx.busy[pe].max(ctx.data_ready(t, cluster)).max(ctx.release);
        Ok(Decision {
            task,
            pe,
            start,
            finish: start + exec,
            tag: PolicyTag::Fast,
        })
    }
}
