//! Fixtures shared by the integration tests: hand-built platforms and
//! applications, random single-invocation scheduling instances, and an
//! exhaustive earliest-finish oracle that reads only the raw platform
//! description.
#![allow(dead_code)]

use das_core::platform::{
    validate_platform, ClusterConfig, ClusterKind, CommModel, PlatformConfig, ProfileEntry,
    TaskTypeConfig,
};
use das_core::workload::{AppLibrary, DfgSpec, EdgeSpec, NodeSpec, TaskInstance, TaskState};
use das_core::Platform;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cluster(id: usize, name: &str, kind: ClusterKind, pe_count: usize, mesh: [u32; 2]) -> ClusterConfig {
    ClusterConfig {
        id,
        name: name.into(),
        kind,
        pe_count,
        mesh,
    }
}

/// `profiles[t]` lists `(cluster, exec_ns, power_mw)` for task type `t`.
pub fn platform_config(
    clusters: Vec<ClusterConfig>,
    profiles: &[&[(usize, f64, f64)]],
    comm: CommModel,
) -> PlatformConfig {
    PlatformConfig {
        name: "test".into(),
        comm,
        clusters,
        task_types: profiles
            .iter()
            .enumerate()
            .map(|(id, entries)| TaskTypeConfig {
                id,
                name: format!("type{id}"),
                profiles: entries
                    .iter()
                    .map(|&(cluster, exec_ns, power_mw)| ProfileEntry {
                        cluster,
                        exec_ns,
                        power_mw,
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn comm(bytes_per_ns: f64, hop_latency_ns: f64) -> CommModel {
    CommModel {
        bytes_per_ns,
        hop_latency_ns,
    }
}

/// One CPU cluster of one PE running a single task type for `exec_ns`.
pub fn one_pe(exec_ns: f64, power_mw: f64) -> Platform {
    validate_platform(platform_config(
        vec![cluster(0, "big", ClusterKind::Cpu, 1, [0, 0])],
        &[&[(0, exec_ns, power_mw)]],
        comm(1.0, 10.0),
    ))
    .unwrap()
}

/// Single-application library from `(task types, edges)`.
pub fn app(types: &[usize], edges: &[(usize, usize, f64)], frame_bits: f64) -> AppLibrary {
    AppLibrary::from_specs(&[DfgSpec {
        app_id: 0,
        name: "app".into(),
        frame_bits,
        nodes: types
            .iter()
            .enumerate()
            .map(|(id, &task_type)| NodeSpec { id, task_type })
            .collect(),
        edges: edges
            .iter()
            .map(|&(src, dst, bytes)| EdgeSpec { src, dst, bytes })
            .collect(),
    }])
    .unwrap()
}

pub fn task(id: usize, task_type: usize, preds: Vec<(usize, f64)>, ready_time: f64) -> TaskInstance {
    TaskInstance {
        id,
        job: 0,
        app: 0,
        node: id,
        task_type,
        depth: 0,
        remaining_preds: 0,
        preds,
        succs: Vec::new(),
        state: TaskState::Ready,
        ready_time,
        start_time: f64::NAN,
        finish_time: f64::NAN,
        pe: None,
    }
}

pub fn done_task(id: usize, task_type: usize, pe: usize, finish: f64) -> TaskInstance {
    TaskInstance {
        state: TaskState::Done,
        pe: Some(pe),
        start_time: 0.0,
        finish_time: finish,
        ready_time: 0.0,
        ..task(id, task_type, Vec::new(), 0.0)
    }
}

/// State of one scheduler invocation.
pub struct Instance {
    pub config: PlatformConfig,
    pub platform: Platform,
    pub tasks: Vec<TaskInstance>,
    pub ready: Vec<usize>,
    pub busy: Vec<f64>,
    pub release: f64,
}

/// Random invocation with up to `max_tasks` ready tasks on up to `max_pes`
/// PEs. Times are small multiples of 10 so that finish-time ties are common.
pub fn random_instance(seed: u64, max_tasks: usize, max_pes: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pes = rng.random_range(1..=max_pes);
    let n_clusters = rng.random_range(1..=n_pes.min(3));
    let mut counts = vec![1usize; n_clusters];
    for _ in n_clusters..n_pes {
        let c = rng.random_range(0..n_clusters);
        counts[c] += 1;
    }
    let mut spots = [[0, 0], [0, 1], [1, 0], [1, 1], [0, 2]];
    spots.shuffle(&mut rng);
    let clusters = (0..n_clusters)
        .map(|c| {
            let kind = if c == 0 || rng.random_bool(0.5) {
                ClusterKind::Cpu
            } else {
                ClusterKind::Accelerator
            };
            cluster(c, &format!("c{c}"), kind, counts[c], spots[c])
        })
        .collect();
    let n_types = 3;
    let profiles: Vec<Vec<(usize, f64, f64)>> = (0..n_types)
        .map(|_| {
            let mut entries = vec![(0, 10.0 * rng.random_range(1..=6) as f64, 100.0)];
            for c in 1..n_clusters {
                if rng.random_bool(0.6) {
                    entries.push((c, 10.0 * rng.random_range(1..=6) as f64, 100.0));
                }
            }
            entries
        })
        .collect();
    let refs: Vec<&[(usize, f64, f64)]> = profiles.iter().map(Vec::as_slice).collect();
    let config = platform_config(clusters, &refs, comm(1.0, 5.0));
    let platform = validate_platform(config.clone()).unwrap();

    let mut tasks = Vec::new();
    let n_done = rng.random_range(0..=3);
    for id in 0..n_done {
        let pe = rng.random_range(0..n_pes);
        let t = rng.random_range(0..n_types);
        tasks.push(done_task(id, t, pe, 10.0 * rng.random_range(0..=3) as f64));
    }
    let n_ready = rng.random_range(1..=max_tasks);
    let mut ready = Vec::new();
    for k in 0..n_ready {
        let id = n_done + k;
        let mut preds = Vec::new();
        for p in 0..n_done {
            if rng.random_bool(0.5) {
                preds.push((p, 10.0 * rng.random_range(0..=3) as f64));
            }
        }
        let t = rng.random_range(0..n_types);
        tasks.push(task(id, t, preds, 10.0 * rng.random_range(0..=3) as f64));
        ready.push(id);
    }
    ready.shuffle(&mut rng);
    let busy = (0..n_pes).map(|_| 10.0 * rng.random_range(0..=5) as f64).collect();
    let release = 10.0 * rng.random_range(0..=2) as f64;
    Instance {
        config,
        platform,
        tasks,
        ready,
        busy,
        release,
    }
}

/// Cluster of each PE, numbered cluster by cluster in id order.
fn pe_clusters(config: &PlatformConfig) -> Vec<usize> {
    let mut cs: Vec<&ClusterConfig> = config.clusters.iter().collect();
    cs.sort_by_key(|c| c.id);
    cs.iter()
        .flat_map(|c| std::iter::repeat_n(c.id, c.pe_count))
        .collect()
}

fn exec(config: &PlatformConfig, task_type: usize, cluster: usize) -> Option<f64> {
    config.task_types[task_type]
        .profiles
        .iter()
        .find(|p| p.cluster == cluster)
        .map(|p| p.exec_ns)
}

fn transfer(config: &PlatformConfig, a: usize, b: usize, bytes: f64) -> f64 {
    let pos = |id: usize| config.clusters.iter().find(|c| c.id == id).unwrap().mesh;
    let (pa, pb) = (pos(a), pos(b));
    let hops = pa[0].abs_diff(pb[0]) + pa[1].abs_diff(pb[1]);
    if hops == 0 {
        0.0
    } else {
        f64::from(hops) * config.comm.hop_latency_ns + bytes / config.comm.bytes_per_ns
    }
}

/// Committed `(task, pe, start, finish)` sequence: at every step all
/// remaining (task, PE) pairs are enumerated and the lexicographically
/// smallest (finish, task, pe) is committed.
pub fn etf_oracle(inst: &Instance) -> Vec<(usize, usize, f64, f64)> {
    let cfg = &inst.config;
    let pes = pe_clusters(cfg);
    let mut busy = inst.busy.clone();
    let mut left: Vec<usize> = inst.ready.clone();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for &t in &left {
            let task = &inst.tasks[t];
            for (pe, &c) in pes.iter().enumerate() {
                let Some(e) = exec(cfg, task.task_type, c) else {
                    continue;
                };
                let mut ready = task.ready_time;
                for &(p, bytes) in &task.preds {
                    let src = pes[inst.tasks[p].pe.unwrap()];
                    ready = ready.max(task.ready_time + transfer(cfg, src, c, bytes));
                }
                let start = busy[pe].max(ready).max(inst.release);
                let cand = (start + e, t, pe, start);
                let better = match best {
                    None => true,
                    Some(b) => {
                        cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (finish, t, pe, start) = best.expect("CPU cluster supports every type");
        busy[pe] = finish;
        left.retain(|&x| x != t);
        out.push((t, pe, start, finish));
    }
    out
}

/// Violations of the trace invariants: precedence with communication delay,
/// PE exclusivity, one placement per task, energy and overhead accounting,
/// and the EDP identity.
pub fn trace_violations(
    platform: &Platform,
    library: &AppLibrary,
    trace: &das_core::SimTrace,
) -> Vec<String> {
    let mut bad = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);

    // one decision per task, and task records agree with it
    let mut placed = vec![0usize; trace.tasks.len()];
    for d in &trace.decisions {
        match placed.get_mut(d.task) {
            Some(n) => *n += 1,
            None => bad.push(format!("decision for unknown task {}", d.task)),
        }
        let Some(t) = trace.tasks.get(d.task) else { continue };
        if t.pe != d.pe || t.start_ns != d.start_ns || t.finish_ns != d.finish_ns {
            bad.push(format!("task {} record disagrees with its decision", d.task));
        }
        if d.start_ns < d.time_ns + d.overhead_ns {
            bad.push(format!("task {} starts before its invocation ends", d.task));
        }
    }
    for (t, n) in placed.iter().enumerate() {
        if *n != 1 {
            bad.push(format!("task {t} placed {n} times"));
        }
    }

    // precedence, exec time, and energy
    let mut by_node = std::collections::HashMap::new();
    for t in &trace.tasks {
        by_node.insert((t.job, t.node), t);
    }
    let mut energy = 0.0;
    for t in &trace.tasks {
        let c = platform.pes[t.pe].cluster;
        let Some(e) = platform.entry(t.task_type, c) else {
            bad.push(format!("task {} on unsupported cluster {c}", t.task));
            continue;
        };
        if !rel(t.finish_ns - t.start_ns, e.exec_ns) {
            bad.push(format!("task {} ran {} ns, expected {}", t.task, t.finish_ns - t.start_ns, e.exec_ns));
        }
        energy += e.power_mw * e.exec_ns * 1e-3;
        let node = &library.apps[t.app].nodes[t.node];
        for &(p, bytes) in &node.preds {
            let pred = by_node[&(t.job, p)];
            let pc = platform.pes[pred.pe].cluster;
            let arrive = pred.finish_ns + platform.comm_cost_clusters(pc, c, bytes);
            if t.start_ns < arrive - 1e-9 {
                bad.push(format!("task {} starts at {} before input from {} at {}", t.task, t.start_ns, pred.task, arrive));
            }
        }
    }
    if !rel(energy, trace.task_energy_nj) {
        bad.push(format!("task energy {} != recomputed {}", trace.task_energy_nj, energy));
    }

    // PE exclusivity
    let mut per_pe: Vec<Vec<(f64, f64)>> = vec![Vec::new(); platform.pes.len()];
    for t in &trace.tasks {
        per_pe[t.pe].push((t.start_ns, t.finish_ns));
    }
    for (pe, iv) in per_pe.iter_mut().enumerate() {
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in iv.windows(2) {
            if w[1].0 < w[0].1 {
                bad.push(format!("PE {pe} overlaps: {:?} and {:?}", w[0], w[1]));
            }
        }
    }

    // scheduler accounting
    let ns: f64 = trace.decisions.iter().map(|d| d.overhead_ns).sum();
    let nj: f64 = trace.decisions.iter().map(|d| d.overhead_nj).sum();
    if !rel(ns, trace.sched_latency_ns) {
        bad.push(format!("overhead latency {ns} != total {}", trace.sched_latency_ns));
    }
    if !rel(nj, trace.sched_energy_nj) {
        bad.push(format!("overhead energy {nj} != total {}", trace.sched_energy_nj));
    }
    let invocations = trace.decisions.iter().map(|d| d.invocation).max().map_or(0, |i| i + 1);
    if invocations != trace.invocations {
        bad.push(format!("{invocations} invocation ids, {} counted", trace.invocations));
    }
    if trace.decisions.windows(2).any(|w| w[1].time_ns < w[0].time_ns) {
        bad.push("decision times are not monotone".into());
    }

    // jobs complete when their last task does
    for j in &trace.jobs {
        let last = trace
            .tasks
            .iter()
            .filter(|t| t.job == j.job)
            .map(|t| t.finish_ns)
            .fold(f64::NEG_INFINITY, f64::max);
        if j.completion_ns != last {
            bad.push(format!("job {} completes at {}, last task at {last}", j.job, j.completion_ns));
        }
    }
    match das_core::metrics::reduce(trace) {
        Ok(m) => {
            if !rel(m.edp, m.total_energy_nj * m.avg_job_exec_ns) {
                bad.push("edp != energy x time".into());
            }
            if !rel(m.total_energy_nj, trace.task_energy_nj + trace.sched_energy_nj) {
                bad.push("total energy != task + scheduler energy".into());
            }
        }
        Err(e) => bad.push(format!("reduce failed: {e}")),
    }
    bad
}
