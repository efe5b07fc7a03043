//! Earliest-task-first list scheduling over the whole ready queue.

use crate::error::SimError;
use crate::platform::PeId;
use crate::schedulers::{Decision, PolicyTag, SchedContext};
use crate::workload::TaskId;

struct Candidate {
    task: TaskId,
    /// Per cluster: (data-ready time, exec time), `None` when unsupported.
    per_cluster: Vec<Option<(f64, f64)>>,
    /// (finish, pe, start) of the best placement under the current busy times.
    best: (f64, PeId, f64),
}

impl Candidate {
    fn place_on(&self, ctx: &SchedContext<'_>, busy: &[f64], pe: PeId) -> Option<(f64, f64)> {
        let (data_ready, exec) = self.per_cluster[ctx.platform.pes[pe].cluster]?;
        let start = busy[pe].max(data_ready).max(ctx.release);
        Some((start, start + exec))
    }

    fn refresh_best(&mut self, ctx: &SchedContext<'_>, busy: &[f64]) -> Option<()> {
        self.best = (0..busy.len())
            .filter_map(|pe| self.place_on(ctx, busy, pe).map(|(st, ft)| (ft, pe, st)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
        Some(())
    }
}

/// Repeatedly commits the (task, PE) pair with the smallest predicted finish
/// time until the ready set is exhausted. Ties go to the lower finish time,
/// then the lower task id, then the lower PE id. Each commitment updates a
/// provisional copy of the PE busy times seen by later picks.
///
/// Only PE busy times change between picks, and they only grow, so a task's
/// best PE has to be recomputed only when that PE was just taken.
pub fn etf_schedule(ctx: &SchedContext<'_>, ready: &[TaskId]) -> Result<Vec<Decision>, SimError> {
    let mut busy = ctx.busy.to_vec();
    let mut pending: Vec<Candidate> = Vec::with_capacity(ready.len());
    for &task in ready {
        let t = &ctx.tasks[task];
        let per_cluster = (0..ctx.platform.clusters.len())
            .map(|c| {
                ctx.platform
                    .exec_time(t.task_type, c)
                    .map(|exec| (ctx.data_ready(t, c), exec))
            })
            .collect();
        let mut cand = Candidate {
            task,
            per_cluster,
            best: (f64::INFINITY, 0, f64::INFINITY),
        };
        cand.refresh_best(ctx, &busy)
            .ok_or(SimError::NoSchedulablePe {
                task,
                task_type: t.task_type,
            })?;
        pending.push(cand);
    }

    let mut out = Vec::with_capacity(ready.len());
    while !pending.is_empty() {
        let pick = (0..pending.len())
            .min_by(|&a, &b| {
                let (fa, pa, _) = pending[a].best;
                let (fb, pb, _) = pending[b].best;
                fa.total_cmp(&fb)
                    .then(pending[a].task.cmp(&pending[b].task))
                    .then(pa.cmp(&pb))
            })
            .expect("pending is non-empty");
        let cand = pending.swap_remove(pick);
        let (finish, pe, start) = cand.best;
        busy[pe] = finish;
        out.push(Decision {
            task: cand.task,
            pe,
            start,
            finish,
            tag: PolicyTag::Slow,
        });
        for other in pending.iter_mut().filter(|c| c.best.1 == pe) {
            other
                .refresh_best(ctx, &busy)
                .expect("task stays schedulable");
        }
    }
    Ok(out)
}
