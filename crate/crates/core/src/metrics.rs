//! Reductions from simulation traces to summary metrics, plus CSV export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::SimTrace;
use crate::error::MetricsError;
use crate::schedulers::PolicyTag;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub jobs: usize,
    /// Mean of completion minus arrival over all jobs.
    pub avg_job_exec_ns: f64,
    pub makespan_ns: f64,
    pub task_energy_nj: f64,
    pub sched_energy_nj: f64,
    pub total_energy_nj: f64,
    /// Total energy times mean job execution time, in nJ·ns.
    pub edp: f64,
    pub decisions_fast: usize,
    pub decisions_slow: usize,
    pub invocations: usize,
    /// Mean scheduler latency per invocation.
    pub avg_sched_latency_ns: f64,
    /// Mean scheduler energy per invocation.
    pub avg_sched_energy_nj: f64,
}

impl Metrics {
    pub fn slow_fraction(&self) -> f64 {
        let n = self.decisions_fast + self.decisions_slow;
        if n == 0 {
            0.0
        } else {
            self.decisions_slow as f64 / n as f64
        }
    }
}

pub fn reduce(trace: &SimTrace) -> Result<Metrics, MetricsError> {
    if trace.jobs.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let mut latencies: Vec<(usize, f64)> =
        trace.jobs.iter().map(|j| (j.job, j.latency_ns())).collect();
    latencies.sort_by_key(|&(job, _)| job);
    let avg = latencies.iter().map(|&(_, l)| l).sum::<f64>() / latencies.len() as f64;
    let first = trace
        .jobs
        .iter()
        .map(|j| j.arrival_ns)
        .fold(f64::INFINITY, f64::min);
    let last = trace
        .jobs
        .iter()
        .map(|j| j.completion_ns)
        .fold(f64::NEG_INFINITY, f64::max);
    let total = trace.task_energy_nj + trace.sched_energy_nj;
    let (fast, slow) = trace.decision_path_counts();
    let inv = trace.invocations.max(1) as f64;
    Ok(Metrics {
        jobs: trace.jobs.len(),
        avg_job_exec_ns: avg,
        makespan_ns: last - first,
        task_energy_nj: trace.task_energy_nj,
        sched_energy_nj: trace.sched_energy_nj,
        total_energy_nj: total,
        edp: total * avg,
        decisions_fast: fast,
        decisions_slow: slow,
        invocations: trace.invocations,
        avg_sched_latency_ns: trace.sched_latency_ns / inv,
        avg_sched_energy_nj: trace.sched_energy_nj / inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Baseline time over candidate time.
    pub speedup: f64,
    /// Candidate EDP over baseline EDP.
    pub edp_ratio: f64,
}

impl Comparison {
    /// Percent EDP reduction of the candidate relative to the baseline.
    pub fn edp_reduction_pct(&self) -> f64 {
        (1.0 - self.edp_ratio) * 100.0
    }
}

/// Compares `candidate` against `baseline`.
pub fn compare(baseline: &Metrics, candidate: &Metrics) -> Result<Comparison, MetricsError> {
    if candidate.avg_job_exec_ns == 0.0 || baseline.edp == 0.0 {
        return Err(MetricsError::ZeroDenominator);
    }
    Ok(Comparison {
        speedup: baseline.avg_job_exec_ns / candidate.avg_job_exec_ns,
        edp_ratio: candidate.edp / baseline.edp,
    })
}

/// One `(workload, rate, policy)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub workload: usize,
    pub rate_mbps: f64,
    pub policy: String,
    pub metrics: Metrics,
}

pub const METRICS_CSV_HEADER: [&str; 14] = [
    "workload",
    "rate_mbps",
    "policy",
    "jobs",
    "avg_job_exec_ns",
    "makespan_ns",
    "task_energy_nj",
    "sched_energy_nj",
    "total_energy_nj",
    "edp",
    "invocations",
    "avg_sched_latency_ns",
    "avg_sched_energy_nj",
    "slow_fraction",
];

pub const DISTRIBUTION_CSV_HEADER: [&str; 6] = [
    "workload",
    "rate_mbps",
    "policy",
    "decisions_fast",
    "decisions_slow",
    "slow_fraction",
];

pub fn write_metrics_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_CSV_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.workload.to_string(),
            r.rate_mbps.to_string(),
            r.policy.clone(),
            m.jobs.to_string(),
            m.avg_job_exec_ns.to_string(),
            m.makespan_ns.to_string(),
            m.task_energy_nj.to_string(),
            m.sched_energy_nj.to_string(),
            m.total_energy_nj.to_string(),
            m.edp.to_string(),
            m.invocations.to_string(),
            m.avg_sched_latency_ns.to_string(),
            m.avg_sched_energy_nj.to_string(),
            m.slow_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distribution_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DISTRIBUTION_CSV_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.workload.to_string(),
            r.rate_mbps.to_string(),
            r.policy.clone(),
            m.decisions_fast.to_string(),
            m.decisions_slow.to_string(),
            m.slow_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-path decision counts for a single trace.
pub fn path_counts(trace: &SimTrace) -> [(PolicyTag, usize); 2] {
    let (f, s) = trace.decision_path_counts();
    [(PolicyTag::Fast, f), (PolicyTag::Slow, s)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::JobRecord;

    fn trace(latencies: &[(f64, f64)]) -> SimTrace {
        SimTrace {
            jobs: latencies
                .iter()
                .enumerate()
                .map(|(job, &(a, c))| JobRecord {
                    job,
                    app: 0,
                    arrival_ns: a,
                    completion_ns: c,
                })
                .collect(),
            task_energy_nj: 90.0,
            sched_energy_nj: 10.0,
            invocations: 4,
            sched_latency_ns: 200.0,
            ..SimTrace::default()
        }
    }

    #[test]
    fn mean_latency_and_edp() {
        let m = reduce(&trace(&[(0.0, 100.0), (0.0, 200.0), (0.0, 300.0)])).unwrap();
        assert_eq!(m.avg_job_exec_ns, 200.0);
        assert_eq!(m.total_energy_nj, 100.0);
        assert_eq!(m.edp, 20_000.0);
        assert_eq!(m.avg_sched_latency_ns, 50.0);
        assert_eq!(m.makespan_ns, 300.0);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(matches!(
            reduce(&SimTrace::default()),
            Err(MetricsError::EmptyTrace)
        ));
    }

    fn with(time: f64, edp: f64) -> Metrics {
        let mut m = reduce(&trace(&[(0.0, 1.0)])).unwrap();
        m.avg_job_exec_ns = time;
        m.edp = edp;
        m
    }

    #[test]
    fn comparison_examples() {
        let c = compare(&with(129.0, 100.0), &with(100.0, 55.0)).unwrap();
        assert!((c.speedup - 1.29).abs() < 1e-12);
        assert!((c.edp_reduction_pct() - 45.0).abs() < 1e-9);
        assert!(matches!(
            compare(&with(1.0, 1.0), &with(0.0, 1.0)),
            Err(MetricsError::ZeroDenominator)
        ));
    }

    #[test]
    fn csv_headers_are_stable() {
        let rows = vec![SweepRow {
            workload: 2,
            rate_mbps: 500.0,
            policy: "lut".into(),
            metrics: with(10.0, 10.0),
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&METRICS_CSV_HEADER.join(",")));
        assert_eq!(text.lines().count(), 2);
    }
}
