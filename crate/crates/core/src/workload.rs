//! Streaming applications as data-flow graphs, frame arrival generation and
//! the workload suite (application mixes crossed with a data-rate ladder).

use std::collections::VecDeque;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, ConfigError, WorkloadError};
use crate::platform::{PeId, Platform, TaskTypeId};

pub type AppId = usize;
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub task_type: TaskTypeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub bytes: f64,
}

/// On-disk form of one application graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfgSpec {
    pub app_id: AppId,
    pub name: String,
    /// Payload bits carried by one frame; drives data-rate accounting.
    pub frame_bits: f64,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
}

impl DfgSpec {
    /// Longest-path depth of every node from the sources (sources are 0).
    pub fn compute_depths(&self) -> Result<Vec<u32>, WorkloadError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut succs = vec![Vec::new(); n];
        for e in &self.edges {
            succs[e.src].push(e.dst);
            indegree[e.dst] += 1;
        }
        let mut depth = vec![0u32; n];
        let mut queue: VecDeque<_> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut visited = 0;
        while let Some(v) = queue.pop_front() {
            visited += 1;
            for &w in &succs[v] {
                depth[w] = depth[w].max(depth[v] + 1);
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if visited != n {
            return Err(WorkloadError::Cycle(self.name.clone()));
        }
        Ok(depth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfgNode {
    pub id: NodeId,
    pub task_type: TaskTypeId,
    pub depth: u32,
    /// (predecessor node, bytes on the edge)
    pub preds: Vec<(NodeId, f64)>,
    pub succs: Vec<NodeId>,
}

/// Validated application graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfg {
    pub app_id: AppId,
    pub name: String,
    pub frame_bits: f64,
    pub nodes: Vec<DfgNode>,
}

impl Dfg {
    pub fn build(spec: &DfgSpec) -> Result<Self, WorkloadError> {
        let n = spec.nodes.len();
        let mut violations = Vec::new();
        if n == 0 {
            violations.push(format!("app `{}` has no nodes", spec.name));
        }
        for (i, node) in spec.nodes.iter().enumerate() {
            if node.id != i {
                violations.push(format!("app `{}` node ids are not dense at {}", spec.name, i));
            }
        }
        for e in &spec.edges {
            if e.src >= n || e.dst >= n {
                violations.push(format!(
                    "app `{}` edge {}->{} references a missing node",
                    spec.name, e.src, e.dst
                ));
            }
            if !(e.bytes >= 0.0 && e.bytes.is_finite()) {
                violations.push(format!("app `{}` edge has invalid byte count", spec.name));
            }
        }
        if !(spec.frame_bits > 0.0 && spec.frame_bits.is_finite()) {
            violations.push(format!("app `{}` frame_bits must be positive", spec.name));
        }
        if !violations.is_empty() {
            return Err(ConfigError::invalid("application graph", violations).into());
        }

        let depths = spec.compute_depths()?;
        let mut nodes: Vec<DfgNode> = spec
            .nodes
            .iter()
            .zip(&depths)
            .map(|(s, &depth)| DfgNode {
                id: s.id,
                task_type: s.task_type,
                depth,
                preds: Vec::new(),
                succs: Vec::new(),
            })
            .collect();
        for e in &spec.edges {
            nodes[e.dst].preds.push((e.src, e.bytes));
            nodes[e.src].succs.push(e.dst);
        }
        Ok(Dfg {
            app_id: spec.app_id,
            name: spec.name.clone(),
            frame_bits: spec.frame_bits,
            nodes,
        })
    }

    pub fn to_spec(&self) -> DfgSpec {
        DfgSpec {
            app_id: self.app_id,
            name: self.name.clone(),
            frame_bits: self.frame_bits,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id,
                    task_type: n.task_type,
                })
                .collect(),
            edges: self
                .nodes
                .iter()
                .flat_map(|n| {
                    n.preds.iter().map(move |&(src, bytes)| EdgeSpec {
                        src,
                        dst: n.id,
                        bytes,
                    })
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LibraryFile {
    apps: Vec<DfgSpec>,
}

/// Application graphs indexed by dense `app_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppLibrary {
    pub apps: Vec<Dfg>,
}

impl AppLibrary {
    pub fn from_specs(specs: &[DfgSpec]) -> Result<Self, WorkloadError> {
        let mut apps = specs.iter().map(Dfg::build).collect::<Result<Vec<_>, _>>()?;
        apps.sort_by_key(|a| a.app_id);
        for (i, a) in apps.iter().enumerate() {
            if a.app_id != i {
                return Err(ConfigError::invalid(
                    "application library",
                    vec![format!("app ids are not dense at {i}")],
                )
                .into());
            }
        }
        Ok(AppLibrary { apps })
    }

    pub fn from_toml(text: &str) -> Result<Self, WorkloadError> {
        let file: LibraryFile =
            toml::from_str(text).map_err(|e| ConfigError::parse("application library", e))?;
        Self::from_specs(&file.apps)
    }

    pub fn from_file(path: &Path) -> Result<Self, WorkloadError> {
        Self::from_toml(&read_file(path)?)
    }

    pub fn to_toml(&self) -> String {
        let file = LibraryFile {
            apps: self.apps.iter().map(Dfg::to_spec).collect(),
        };
        toml::to_string(&file).expect("library is always serializable")
    }

    pub fn get(&self, app: AppId) -> Result<&Dfg, WorkloadError> {
        self.apps.get(app).ok_or(WorkloadError::UnknownApp(app))
    }

    /// Every task type referenced by the library must be profiled.
    pub fn check_against(&self, platform: &Platform) -> Result<(), ConfigError> {
        let violations: Vec<_> = self
            .apps
            .iter()
            .flat_map(|a| a.nodes.iter().map(move |n| (a, n)))
            .filter(|(_, n)| n.task_type >= platform.num_task_types())
            .map(|(a, n)| {
                format!(
                    "app `{}` node {} uses unprofiled task type {}",
                    a.name, n.id, n.task_type
                )
            })
            .collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::invalid("application library", violations))
        }
    }
}

// Task type ids of the shipped platform profile.
const SCRAMBLER: usize = 0;
const ENCODER: usize = 1;
const INTERLEAVER: usize = 2;
const QPSK: usize = 3;
const FFT: usize = 4;
const IFFT: usize = 5;
const FIR: usize = 6;
const DECODER: usize = 7;
const MATMUL: usize = 8;
const VMULT: usize = 9;
const MAX_DETECT: usize = 10;
const WAVEGEN: usize = 11;

struct GraphBuilder {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn node(&mut self, task_type: TaskTypeId) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(NodeSpec { id, task_type });
        id
    }

    fn edge(&mut self, src: NodeId, dst: NodeId, bytes: f64) {
        self.edges.push(EdgeSpec { src, dst, bytes });
    }

    fn chain(&mut self, types: &[TaskTypeId], bytes: f64) -> (NodeId, NodeId) {
        let first = self.node(types[0]);
        let mut prev = first;
        for &t in &types[1..] {
            let n = self.node(t);
            self.edge(prev, n, bytes);
            prev = n;
        }
        (first, prev)
    }

    fn finish(self, app_id: AppId, name: &str, frame_bits: f64) -> DfgSpec {
        DfgSpec {
            app_id,
            name: name.to_string(),
            frame_bits,
            nodes: self.nodes,
            edges: self.edges,
        }
    }
}

/// Five stand-in streaming applications with distinct shapes:
///
/// | id | name | shape |
/// |----|------|-------|
/// | 0 | `range_detection` | 5-node chain |
/// | 1 | `temporal_mitigation` | two-stage fork-join |
/// | 2 | `wifi_rx` | wide fan-out of FFT/CPU branches |
/// | 3 | `wifi_tx` | chain with a vector-multiply fork-join |
/// | 4 | `app1` | layered mixed graph |
///
/// Frame sizes put the onset of big-cluster congestion at different rates
/// per application.
pub fn synth_app_library_specs() -> Vec<DfgSpec> {
    let mut specs = Vec::new();

    let mut g = GraphBuilder::new();
    g.chain(&[WAVEGEN, FFT, VMULT, IFFT, MAX_DETECT], 512.0);
    specs.push(g.finish(0, "range_detection", 1024.0));

    let mut g = GraphBuilder::new();
    let src = g.node(SCRAMBLER);
    let join = g.node(MATMUL);
    for _ in 0..4 {
        let v = g.node(VMULT);
        g.edge(src, v, 256.0);
        g.edge(v, join, 256.0);
    }
    let sink = g.node(MAX_DETECT);
    for _ in 0..3 {
        let q = g.node(QPSK);
        g.edge(join, q, 128.0);
        g.edge(q, sink, 128.0);
    }
    specs.push(g.finish(1, "temporal_mitigation", 4096.0));

    let mut g = GraphBuilder::new();
    let (_, extract) = g.chain(&[FIR, MAX_DETECT], 512.0);
    let deinterleave = g.node(INTERLEAVER);
    for _ in 0..4 {
        let f = g.node(FFT);
        let q = g.node(QPSK);
        g.edge(extract, f, 128.0);
        g.edge(f, q, 128.0);
        g.edge(q, deinterleave, 64.0);
    }
    let (dec, _) = g.chain(&[DECODER, SCRAMBLER], 256.0);
    g.edge(deinterleave, dec, 512.0);
    specs.push(g.finish(2, "wifi_rx", 1600.0));

    let mut g = GraphBuilder::new();
    let (_, qpsk) = g.chain(&[SCRAMBLER, ENCODER, INTERLEAVER, QPSK], 256.0);
    let (ifft, _) = g.chain(&[IFFT, MAX_DETECT], 256.0);
    for _ in 0..4 {
        let pilot = g.node(VMULT);
        g.edge(qpsk, pilot, 64.0);
        g.edge(pilot, ifft, 64.0);
    }
    specs.push(g.finish(3, "wifi_tx", 3200.0));

    let mut g = GraphBuilder::new();
    let layers: [&[TaskTypeId]; 7] = [
        &[WAVEGEN],
        &[MATMUL, FIR, FFT, VMULT],
        &[VMULT, VMULT, IFFT, FIR, INTERLEAVER, QPSK],
        &[DECODER, MATMUL, VMULT, FFT],
        &[QPSK, VMULT, MAX_DETECT, FIR],
        &[INTERLEAVER, VMULT],
        &[MAX_DETECT],
    ];
    let mut prev: Vec<NodeId> = Vec::new();
    for layer in layers {
        let ids: Vec<NodeId> = layer.iter().map(|&t| g.node(t)).collect();
        if !prev.is_empty() {
            for (i, &n) in ids.iter().enumerate() {
                g.edge(prev[i % prev.len()], n, 256.0);
                if prev.len() > 1 && i + 1 < ids.len() {
                    g.edge(prev[(i + 1) % prev.len()], n, 128.0);
                }
            }
            // Keep every previous-layer node connected forward.
            for (j, &p) in prev.iter().enumerate() {
                if j >= ids.len() {
                    g.edge(p, ids[ids.len() - 1], 128.0);
                }
            }
        }
        prev = ids;
    }
    specs.push(g.finish(4, "app1", 6720.0));

    specs
}

pub fn synth_app_library() -> AppLibrary {
    AppLibrary::from_specs(&synth_app_library_specs()).expect("synthetic library is valid")
}

pub type TaskId = usize;
pub type JobId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Waiting,
    Ready,
    Running,
    Done,
}

/// One node of one frame's job as it moves through the simulator.
///
/// `Running` covers both "assigned and queued on its PE" and "executing":
/// assignments are committed with their start time already fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub id: TaskId,
    pub job: JobId,
    pub app: AppId,
    pub node: NodeId,
    pub task_type: TaskTypeId,
    pub depth: u32,
    /// (predecessor instance, bytes on the edge)
    pub preds: Vec<(TaskId, f64)>,
    pub succs: Vec<TaskId>,
    pub remaining_preds: usize,
    pub state: TaskState,
    pub ready_time: f64,
    pub start_time: f64,
    pub finish_time: f64,
    pub pe: Option<PeId>,
}

impl TaskInstance {
    /// Instantiates every node of `dfg` for `job`, numbering instances from
    /// `base`.
    pub fn instantiate(dfg: &Dfg, job: JobId, base: TaskId) -> Vec<TaskInstance> {
        dfg.nodes
            .iter()
            .map(|n| TaskInstance {
                id: base + n.id,
                job,
                app: dfg.app_id,
                node: n.id,
                task_type: n.task_type,
                depth: n.depth,
                preds: n.preds.iter().map(|&(p, b)| (base + p, b)).collect(),
                succs: n.succs.iter().map(|&s| base + s).collect(),
                remaining_preds: n.preds.len(),
                state: TaskState::Waiting,
                ready_time: f64::NAN,
                start_time: f64::NAN,
                finish_time: f64::NAN,
                pe: None,
            })
            .collect()
    }

    /// Moves to `next`, panicking on any transition other than
    /// waiting -> ready -> running -> done.
    pub fn transition(&mut self, next: TaskState) {
        let ok = matches!(
            (self.state, next),
            (TaskState::Waiting, TaskState::Ready)
                | (TaskState::Ready, TaskState::Running)
                | (TaskState::Running, TaskState::Done)
        );
        assert!(ok, "task {}: illegal transition {:?} -> {:?}", self.id, self.state, next);
        self.state = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalModel {
    #[default]
    Periodic,
    Poisson,
}

/// One application mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub id: usize,
    pub mix: Vec<(AppId, f64)>,
}

/// A workload at a single data rate: the unit one simulation run executes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub workload: usize,
    pub mix: Vec<(AppId, f64)>,
    pub data_rate_mbps: f64,
    pub frame_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub arrival: ArrivalModel,
}

impl Scenario {
    pub fn mean_frame_bits(&self, library: &AppLibrary) -> Result<f64, WorkloadError> {
        let mut bits = 0.0;
        for &(app, w) in &self.mix {
            bits += w * library.get(app)?.frame_bits;
        }
        Ok(bits)
    }

    /// Mean inter-arrival time in ns: bits / (Mbps * 1e-3 bits/ns).
    pub fn inter_arrival_ns(&self, library: &AppLibrary) -> Result<f64, WorkloadError> {
        Ok(self.mean_frame_bits(library)? * 1e3 / self.data_rate_mbps)
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        if self.mix.is_empty() {
            return Err(WorkloadError::EmptyMix);
        }
        let total: f64 = self.mix.iter().map(|m| m.1).sum();
        let mut violations = Vec::new();
        if (total - 1.0).abs() > 1e-9 {
            violations.push(format!("mix weights sum to {total}, expected 1"));
        }
        if self.mix.iter().any(|m| m.1.is_nan() || m.1 < 0.0) {
            violations.push("mix weights must be non-negative".to_string());
        }
        if !(self.data_rate_mbps > 0.0 && self.data_rate_mbps.is_finite()) {
            violations.push("data rate must be positive".to_string());
        }
        if self.frame_count == 0 {
            violations.push("frame count must be positive".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::invalid("scenario", violations).into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time_ns: f64,
    pub app: AppId,
}

/// Frame arrival times and the application drawn for each frame.
pub fn generate_arrivals(
    scenario: &Scenario,
    library: &AppLibrary,
) -> Result<Vec<Arrival>, WorkloadError> {
    scenario.validate()?;
    for &(app, _) in &scenario.mix {
        library.get(app)?;
    }
    let mean_gap = scenario.inter_arrival_ns(library)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let picker = WeightedIndex::new(scenario.mix.iter().map(|m| m.1))
        .map_err(|_| WorkloadError::EmptyMix)?;
    let gaps = Exp::new(1.0 / mean_gap).expect("positive rate");

    let mut t = 0.0;
    let mut out = Vec::with_capacity(scenario.frame_count);
    for k in 0..scenario.frame_count {
        let app = scenario.mix[picker.sample(&mut rng)].0;
        let time_ns = match scenario.arrival {
            ArrivalModel::Periodic => k as f64 * mean_gap,
            ArrivalModel::Poisson => {
                if k > 0 {
                    t += gaps.sample(&mut rng);
                }
                t
            }
        };
        out.push(Arrival { time_ns, app });
    }
    Ok(out)
}

/// `count` values spaced geometrically from `lo` to `hi` inclusive.
pub fn rate_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
            (0..count).map(|i| lo * ratio.powi(i as i32)).collect()
        }
    }
}

pub const DEFAULT_RATE_COUNT: usize = 14;
pub const DEFAULT_RATE_MIN_MBPS: f64 = 100.0;
pub const DEFAULT_RATE_MAX_MBPS: f64 = 4000.0;
pub const DEFAULT_FRAME_COUNT: usize = 60;

/// Workload mixes crossed with a data-rate ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub seed: u64,
    pub frame_count: usize,
    #[serde(default)]
    pub arrival: ArrivalModel,
    pub rates_mbps: Vec<f64>,
    pub workloads: Vec<Workload>,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::parse("workload suite", e))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&read_file(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("suite is always serializable")
    }

    /// Every (workload, rate) point, workload-major.
    pub fn scenarios(&self) -> Vec<Scenario> {
        self.workloads
            .iter()
            .flat_map(|w| {
                self.rates_mbps.iter().enumerate().map(move |(ri, &rate)| Scenario {
                    workload: w.id,
                    mix: w.mix.clone(),
                    data_rate_mbps: rate,
                    frame_count: self.frame_count,
                    seed: scenario_seed(self.seed, w.id, ri),
                    arrival: self.arrival,
                })
            })
            .collect()
    }
}

fn scenario_seed(suite_seed: u64, workload: usize, rate_index: usize) -> u64 {
    // splitmix64 finalizer over the packed coordinates
    let mut z = suite_seed
        ^ (workload as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (rate_index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes ranging from single-application workloads to the uniform mix over
/// all `n_apps`, paired with `rates_mbps`.
pub fn workload_suite(count: usize, n_apps: usize, seed: u64, rates_mbps: Vec<f64>) -> Suite {
    assert!(count >= 1 && n_apps >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut workloads = Vec::with_capacity(count);
    for id in 0..count {
        let mix = if count == 1 || n_apps == 1 {
            vec![(0, 1.0)]
        } else if id + 1 == count {
            (0..n_apps).map(|a| (a, 1.0 / n_apps as f64)).collect()
        } else if id < n_apps {
            vec![(id, 1.0)]
        } else {
            let k = 2 + id % (n_apps - 1);
            let mut apps: Vec<AppId> = (0..n_apps).collect();
            // partial Fisher-Yates to pick k distinct apps
            for i in 0..k {
                let j = rng.random_range(i..n_apps);
                apps.swap(i, j);
            }
            let mut chosen: Vec<AppId> = apps[..k].to_vec();
            chosen.sort_unstable();
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut mix: Vec<(AppId, f64)> =
                chosen.into_iter().zip(raw).map(|(a, w)| (a, w / total)).collect();
            // absorb rounding so weights sum to exactly 1
            let rest: f64 = mix[1..].iter().map(|m| m.1).sum();
            mix[0].1 = 1.0 - rest;
            mix
        };
        workloads.push(Workload { id, mix });
    }
    Suite {
        seed,
        frame_count: DEFAULT_FRAME_COUNT,
        arrival: ArrivalModel::Periodic,
        rates_mbps,
        workloads,
    }
}

pub fn default_suite(count: usize, seed: u64) -> Suite {
    workload_suite(
        count,
        5,
        seed,
        rate_ladder(DEFAULT_RATE_MIN_MBPS, DEFAULT_RATE_MAX_MBPS, DEFAULT_RATE_COUNT),
    )
}
