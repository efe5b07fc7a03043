//! Per-run event log.

use std::io::Write;

use crate::platform::{ClusterId, PeId};
use crate::schedulers::PolicyTag;
use crate::workload::{AppId, JobId, TaskId};

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub seq: usize,
    pub invocation: usize,
    /// Invocation start time.
    pub time_ns: f64,
    pub path: PolicyTag,
    pub ready_len: usize,
    pub task: TaskId,
    pub job: JobId,
    pub app: AppId,
    pub task_type: usize,
    pub pe: PeId,
    pub cluster: ClusterId,
    pub start_ns: f64,
    pub finish_ns: f64,
    /// The invocation's whole overhead sits on its first decision; later
    /// decisions of the same invocation carry zero.
    pub overhead_ns: f64,
    pub overhead_nj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task: TaskId,
    pub job: JobId,
    pub app: AppId,
    pub node: usize,
    pub task_type: usize,
    pub pe: PeId,
    pub ready_ns: f64,
    pub start_ns: f64,
    pub finish_ns: f64,
    pub energy_nj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job: JobId,
    pub app: AppId,
    pub arrival_ns: f64,
    pub completion_ns: f64,
}

impl JobRecord {
    pub fn latency_ns(&self) -> f64 {
        self.completion_ns - self.arrival_ns
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub policy: String,
    pub decisions: Vec<DecisionRecord>,
    /// Indexed by task instance id.
    pub tasks: Vec<TaskRecord>,
    /// Indexed by job id.
    pub jobs: Vec<JobRecord>,
    pub invocations: usize,
    pub task_energy_nj: f64,
    pub sched_energy_nj: f64,
    pub sched_latency_ns: f64,
    pub events: u64,
}

pub const TRACE_CSV_HEADER: &str = "kind,id,time_ns,path,invocation,ready_len,task,app,task_type,pe,start_ns,finish_ns,overhead_ns,overhead_nj,latency_ns";

impl SimTrace {
    /// One `decision` row per scheduling decision, then one `job` row per
    /// completed job. Job rows use `time_ns` for arrival, `finish_ns` for
    /// completion and leave decision-only columns empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for d in &self.decisions {
            writeln!(
                w,
                "decision,{},{},{},{},{},{},{},{},{},{},{},{},{},",
                d.seq,
                d.time_ns,
                d.path,
                d.invocation,
                d.ready_len,
                d.task,
                d.app,
                d.task_type,
                d.pe,
                d.start_ns,
                d.finish_ns,
                d.overhead_ns,
                d.overhead_nj
            )?;
        }
        for j in &self.jobs {
            writeln!(
                w,
                "job,{},{},,,,,{},,,,{},,,{}",
                j.job,
                j.arrival_ns,
                j.app,
                j.completion_ns,
                j.latency_ns()
            )?;
        }
        Ok(())
    }

    pub fn decision_path_counts(&self) -> (usize, usize) {
        let fast = self.decisions.iter().filter(|d| d.path == PolicyTag::Fast).count();
        (fast, self.decisions.len() - fast)
    }
}
