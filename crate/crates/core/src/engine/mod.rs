//! Deterministic discrete-event simulator.
//!
//! Frames arrive, instantiate one job each, and release their source tasks
//! into the ready queue. A single serialized scheduler resource picks tasks
//! off the ready queue according to the run's [`Policy`]; each invocation
//! costs latency and energy from the [`OverheadModel`], and assignments it
//! makes cannot start before the invocation ends.
//!
//! Assignments are non-preemptive and committed with fixed start and finish
//! times, so a PE's `busy` value is the finish time of its last committed task.

pub mod event;
pub mod overhead;
pub mod rate;
pub mod snapshot;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{ClassifierError, SimError};
use crate::platform::Platform;
use crate::schedulers::{
    etf_schedule, threshold_path, Decision, LutPolicy, Policy, PolicyTag, SchedContext,
};
use crate::workload::{
    generate_arrivals, AppLibrary, Arrival, Scenario, TaskId, TaskInstance, TaskState,
};

pub use event::{Event, EventKind, EventQueue};
pub use overhead::OverheadModel;
pub use rate::{RateConfig, RateTracker, RATE_ENTRIES};
pub use snapshot::{CaptureInput, FeatureLayout, FeatureSnapshot, TaskFeatures};
pub use trace::{DecisionRecord, JobRecord, SimTrace, TaskRecord, TRACE_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub overhead: OverheadModel,
    pub rate: RateConfig,
    /// Runs processing more events than this abort.
    pub event_cap: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            overhead: OverheadModel::default(),
            rate: RateConfig::default(),
            event_cap: 50_000_000,
        }
    }
}

/// What a [`Probe`] sees at each scheduler invocation, before the policy's
/// decisions are committed.
pub struct Invocation<'a> {
    pub now: f64,
    pub path: PolicyTag,
    pub ctx: SchedContext<'a>,
    pub ready: &'a [TaskId],
    /// Counter vector from the latest refresh.
    pub features: &'a [f64],
    pub decisions: &'a [Decision],
    pub overhead: &'a OverheadModel,
}

/// Instrumentation hook called once per scheduler invocation.
pub trait Probe {
    fn on_invocation(&mut self, inv: &Invocation<'_>) -> Result<(), SimError>;
}

/// Runs `scenario` to completion under `policy`.
pub fn run(
    platform: &Platform,
    library: &AppLibrary,
    scenario: &Scenario,
    policy: &Policy,
    config: &EngineConfig,
) -> Result<SimTrace, SimError> {
    Sim::new(platform, library, scenario, policy, config, None)?.run()
}

/// [`run`] with a probe observing every invocation. Counters are maintained
/// for the probe even when the policy itself does not read them.
pub fn run_with_probe(
    platform: &Platform,
    library: &AppLibrary,
    scenario: &Scenario,
    policy: &Policy,
    config: &EngineConfig,
    probe: &mut dyn Probe,
) -> Result<SimTrace, SimError> {
    Sim::new(platform, library, scenario, policy, config, Some(probe))?.run()
}

struct Sim<'a> {
    platform: &'a Platform,
    library: &'a AppLibrary,
    policy: &'a Policy,
    config: &'a EngineConfig,
    probe: Option<&'a mut dyn Probe>,
    lut: LutPolicy,
    layout: FeatureLayout,
    arrivals: Vec<Arrival>,
    tasks: Vec<TaskInstance>,
    job_remaining: Vec<usize>,
    busy: Vec<f64>,
    intervals: Vec<Vec<(f64, f64)>>,
    ready: Vec<TaskId>,
    queue: EventQueue,
    scheduler_busy: bool,
    rate: RateTracker,
    track_counters: bool,
    features: Vec<f64>,
    cached_label: PolicyTag,
    trace: SimTrace,
    now: f64,
}

impl<'a> Sim<'a> {
    fn new(
        platform: &'a Platform,
        library: &'a AppLibrary,
        scenario: &Scenario,
        policy: &'a Policy,
        config: &'a EngineConfig,
        probe: Option<&'a mut dyn Probe>,
    ) -> Result<Self, SimError> {
        library
            .check_against(platform)
            .map_err(crate::error::WorkloadError::from)?;
        let layout = FeatureLayout::for_platform(platform);
        if let Policy::Das(tree) = policy {
            if let Some(index) = tree.max_feature_index().filter(|&i| i >= layout.len()) {
                return Err(ClassifierError::MissingFeature {
                    index,
                    width: layout.len(),
                }
                .into());
            }
        }
        let arrivals = generate_arrivals(scenario, library)?;
        let mut queue = EventQueue::new();
        for (i, a) in arrivals.iter().enumerate() {
            queue.push(a.time_ns, EventKind::FrameArrival(i));
        }
        let n_pes = platform.pes.len();
        let track_counters = policy.needs_counters() || probe.is_some();
        Ok(Sim {
            platform,
            library,
            policy,
            config,
            probe,
            lut: LutPolicy::from_platform(platform),
            layout,
            tasks: Vec::new(),
            job_remaining: Vec::with_capacity(arrivals.len()),
            arrivals,
            busy: vec![0.0; n_pes],
            intervals: vec![Vec::new(); n_pes],
            ready: Vec::new(),
            queue,
            scheduler_busy: false,
            rate: RateTracker::new(config.rate),
            track_counters,
            features: Vec::new(),
            cached_label: PolicyTag::Fast,
            trace: SimTrace {
                policy: policy.name().to_string(),
                ..SimTrace::default()
            },
            now: 0.0,
        })
    }

    fn run(mut self) -> Result<SimTrace, SimError> {
        if self.track_counters {
            self.refresh_counters()?;
        }
        while let Some(ev) = self.queue.pop() {
            self.trace.events += 1;
            if self.trace.events > self.config.event_cap {
                return Err(SimError::EventCapExceeded(self.config.event_cap));
            }
            self.now = ev.time;
            let changed = match ev.kind {
                EventKind::FrameArrival(i) => {
                    self.on_arrival(i)?;
                    true
                }
                EventKind::TaskFinish(t) => {
                    self.on_finish(t);
                    true
                }
                EventKind::SchedulerDone => {
                    self.scheduler_busy = false;
                    false
                }
            };
            if changed && self.track_counters {
                self.refresh_counters()?;
            }
            self.try_invoke()?;
        }
        let unfinished = self.tasks.iter().filter(|t| t.state != TaskState::Done).count();
        if unfinished > 0 || self.trace.jobs.len() != self.arrivals.len() {
            return Err(SimError::Incomplete(unfinished));
        }
        self.finish_trace()
    }

    fn on_arrival(&mut self, index: usize) -> Result<(), SimError> {
        let arrival = self.arrivals[index];
        let dfg = self.library.get(arrival.app)?;
        let job = self.job_remaining.len();
        let base = self.tasks.len();
        self.tasks.extend(TaskInstance::instantiate(dfg, job, base));
        self.job_remaining.push(dfg.len());
        self.trace.jobs.push(JobRecord {
            job,
            app: arrival.app,
            arrival_ns: self.now,
            completion_ns: f64::NAN,
        });
        for id in base..self.tasks.len() {
            if self.tasks[id].remaining_preds == 0 {
                self.make_ready(id);
            }
        }
        self.rate.update(dfg.frame_bits, self.now);
        Ok(())
    }

    fn make_ready(&mut self, id: TaskId) {
        let t = &mut self.tasks[id];
        t.transition(TaskState::Ready);
        t.ready_time = self.now;
        self.ready.push(id);
    }

    fn on_finish(&mut self, id: TaskId) {
        self.tasks[id].transition(TaskState::Done);
        let job = self.tasks[id].job;
        for k in 0..self.tasks[id].succs.len() {
            let s = self.tasks[id].succs[k];
            self.tasks[s].remaining_preds -= 1;
            if self.tasks[s].remaining_preds == 0 {
                self.make_ready(s);
            }
        }
        self.job_remaining[job] -= 1;
        if self.job_remaining[job] == 0 {
            self.trace.jobs[job].completion_ns = self.now;
        }
    }

    /// Recomputes the counter vector and the cached classifier label. Called
    /// on every change to the ready queue or PE availability, so the label is
    /// already known when the next invocation starts.
    fn refresh_counters(&mut self) -> Result<(), SimError> {
        self.rate.advance(self.now);
        let snapshot = FeatureSnapshot::capture(&CaptureInput {
            platform: self.platform,
            lut: &self.lut,
            now: self.now,
            rate_mbps: self.rate.estimate_mbps(),
            busy: &self.busy,
            intervals: &self.intervals,
            util_window_ns: self.config.rate.span_ns(),
            tasks: &self.tasks,
            head: self.ready.first().copied(),
        });
        self.features = snapshot.to_vector(&self.layout);
        self.cached_label = match self.policy {
            Policy::Das(tree) => tree.classify(&self.features)?,
            Policy::Threshold(theta) => {
                threshold_path(self.features[FeatureLayout::RATE], *theta)
            }
            _ => PolicyTag::Fast,
        };
        Ok(())
    }

    fn try_invoke(&mut self) -> Result<(), SimError> {
        if self.scheduler_busy || self.ready.is_empty() {
            return Ok(());
        }
        let overhead = &self.config.overhead;
        let n = self.ready.len();
        let path = match self.policy {
            Policy::Lut => PolicyTag::Fast,
            Policy::Etf | Policy::EtfIdeal => PolicyTag::Slow,
            Policy::Das(_) | Policy::Threshold(_) => self.cached_label,
        };
        let (latency, mut energy) = match (self.policy, path) {
            (Policy::EtfIdeal, _) => (0.0, 0.0),
            (_, PolicyTag::Fast) => (overhead.fast_latency_ns, overhead.fast_energy_nj),
            (_, PolicyTag::Slow) => (overhead.slow_latency(n), overhead.slow_energy(n)),
        };
        if matches!(self.policy, Policy::Das(_)) {
            energy += overhead.classifier_energy_nj;
        }
        let ctx = SchedContext {
            platform: self.platform,
            tasks: &self.tasks,
            busy: &self.busy,
            release: self.now + latency,
        };
        let decisions = match path {
            PolicyTag::Fast => vec![self.lut.schedule(&ctx, self.ready[0])?],
            PolicyTag::Slow => etf_schedule(&ctx, &self.ready)?,
        };
        if let Some(probe) = self.probe.as_deref_mut() {
            probe.on_invocation(&Invocation {
                now: self.now,
                path,
                ctx,
                ready: &self.ready,
                features: &self.features,
                decisions: &decisions,
                overhead,
            })?;
        }

        let invocation = self.trace.invocations;
        for (k, d) in decisions.iter().enumerate() {
            self.commit(d, invocation, path, n, if k == 0 { (latency, energy) } else { (0.0, 0.0) });
        }
        match path {
            PolicyTag::Fast => {
                self.ready.remove(0);
            }
            PolicyTag::Slow => self.ready.clear(),
        }
        self.trace.invocations += 1;
        self.trace.sched_latency_ns += latency;
        self.trace.sched_energy_nj += energy;
        self.scheduler_busy = true;
        self.queue.push(self.now + latency, EventKind::SchedulerDone);
        if self.track_counters {
            self.refresh_counters()?;
        }
        Ok(())
    }

    fn commit(
        &mut self,
        d: &Decision,
        invocation: usize,
        path: PolicyTag,
        ready_len: usize,
        (overhead_ns, overhead_nj): (f64, f64),
    ) {
        let cluster = self.platform.pes[d.pe].cluster;
        let t = &mut self.tasks[d.task];
        t.transition(TaskState::Running);
        t.pe = Some(d.pe);
        t.start_time = d.start;
        t.finish_time = d.finish;
        debug_assert!(d.start >= self.busy[d.pe]);
        self.busy[d.pe] = d.finish;
        self.intervals[d.pe].push((d.start, d.finish));
        self.queue.push(d.finish, EventKind::TaskFinish(d.task));
        self.trace.decisions.push(DecisionRecord {
            seq: self.trace.decisions.len(),
            invocation,
            time_ns: self.now,
            path,
            ready_len,
            task: d.task,
            job: t.job,
            app: t.app,
            task_type: t.task_type,
            pe: d.pe,
            cluster,
            start_ns: d.start,
            finish_ns: d.finish,
            overhead_ns,
            overhead_nj,
        });
    }

    fn finish_trace(mut self) -> Result<SimTrace, SimError> {
        let mut task_energy = 0.0;
        let mut records = Vec::with_capacity(self.tasks.len());
        for t in &self.tasks {
            let pe = t.pe.expect("finished task was placed");
            let cluster = self.platform.pes[pe].cluster;
            let exec = self
                .platform
                .exec_time(t.task_type, cluster)
                .expect("placement respects support");
            let energy = self
                .platform
                .energy_of(t.task_type, cluster, exec)
                .expect("placement respects support");
            task_energy += energy;
            records.push(TaskRecord {
                task: t.id,
                job: t.job,
                app: t.app,
                node: t.node,
                task_type: t.task_type,
                pe,
                ready_ns: t.ready_time,
                start_ns: t.start_time,
                finish_ns: t.finish_time,
                energy_nj: energy,
            });
        }
        self.trace.tasks = records;
        self.trace.task_energy_nj = task_energy;
        Ok(self.trace)
    }
}
