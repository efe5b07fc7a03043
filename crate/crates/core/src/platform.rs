//! Heterogeneous SoC description: PE clusters, per-cluster task profiles and
//! the mesh communication-cost model.
//!
//! A [`Platform`] is built from a [`PlatformConfig`] (usually parsed from a
//! TOML file) and is immutable afterwards. Mutable per-PE state such as
//! `busy_until` lives in the simulation engine.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, ConfigError, PlatformError};

pub type ClusterId = usize;
pub type PeId = usize;
pub type TaskTypeId = usize;

const DEFAULT_PLATFORM: &str = include_str!("../configs/dssoc.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterKind {
    Cpu,
    Accelerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub id: ClusterId,
    pub name: String,
    pub kind: ClusterKind,
    pub pe_count: usize,
    pub mesh: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub cluster: ClusterId,
    pub exec_ns: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTypeConfig {
    pub id: TaskTypeId,
    #[serde(default)]
    pub name: String,
    pub profiles: Vec<ProfileEntry>,
}

/// Raw platform description as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    #[serde(default)]
    pub name: String,
    pub comm: CommModel,
    pub clusters: Vec<ClusterConfig>,
    pub task_types: Vec<TaskTypeConfig>,
}

impl PlatformConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::parse("platform description", e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("platform config is always serializable")
    }
}

/// Cluster-granular mesh cost: every PE of a cluster shares one mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommModel {
    pub bytes_per_ns: f64,
    pub hop_latency_ns: f64,
}

impl CommModel {
    /// `hops * hop_latency + bytes / bandwidth`, zero when `hops == 0`.
    pub fn cost(&self, hops: u32, bytes: f64) -> f64 {
        if hops == 0 {
            return 0.0;
        }
        f64::from(hops) * self.hop_latency_ns + bytes / self.bytes_per_ns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    pub name: String,
    pub kind: ClusterKind,
    pub pe_count: usize,
    pub mesh: (u32, u32),
    /// Global ids of the PEs in this cluster, contiguous and ascending.
    pub pes: Vec<PeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pe {
    pub id: PeId,
    pub cluster: ClusterId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecEntry {
    pub exec_ns: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskProfile {
    pub id: TaskTypeId,
    pub name: String,
    /// Indexed by cluster id; `None` when the cluster cannot run the type.
    pub entries: Vec<Option<ExecEntry>>,
}

impl TaskProfile {
    pub fn supported_clusters(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(c, e)| e.map(|_| c))
    }
}

/// Validated, immutable SoC model.
#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    pub name: String,
    pub clusters: Vec<Cluster>,
    pub pes: Vec<Pe>,
    pub profiles: Vec<TaskProfile>,
    pub comm: CommModel,
    hops: Vec<Vec<u32>>,
}

impl Platform {
    /// The shipped 19-PE DSSoC.
    pub fn default_dssoc() -> Self {
        let config = PlatformConfig::from_toml(DEFAULT_PLATFORM).expect("shipped platform parses");
        validate_platform(config).expect("shipped platform is valid")
    }

    pub fn default_config_text() -> &'static str {
        DEFAULT_PLATFORM
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = read_file(path)?;
        validate_platform(PlatformConfig::from_toml(&text)?)
    }

    pub fn cluster_of(&self, pe: PeId) -> Result<ClusterId, PlatformError> {
        self.pes
            .get(pe)
            .map(|p| p.cluster)
            .ok_or(PlatformError::UnknownPe(pe))
    }

    pub fn num_task_types(&self) -> usize {
        self.profiles.len()
    }

    pub fn entry(&self, task_type: TaskTypeId, cluster: ClusterId) -> Option<ExecEntry> {
        self.profiles
            .get(task_type)
            .and_then(|p| p.entries.get(cluster).copied().flatten())
    }

    pub fn exec_time(&self, task_type: TaskTypeId, cluster: ClusterId) -> Option<f64> {
        self.entry(task_type, cluster).map(|e| e.exec_ns)
    }

    pub fn supports(&self, task_type: TaskTypeId, cluster: ClusterId) -> bool {
        self.entry(task_type, cluster).is_some()
    }

    pub fn hops(&self, a: ClusterId, b: ClusterId) -> u32 {
        self.hops[a][b]
    }

    /// Transfer latency in ns for `bytes` moving from `src` to `dst`.
    pub fn comm_cost(&self, src: PeId, dst: PeId, bytes: f64) -> Result<f64, PlatformError> {
        let a = self.cluster_of(src)?;
        let b = self.cluster_of(dst)?;
        Ok(self.comm_cost_clusters(a, b, bytes))
    }

    pub fn comm_cost_clusters(&self, a: ClusterId, b: ClusterId, bytes: f64) -> f64 {
        self.comm.cost(self.hops[a][b], bytes)
    }

    /// Energy in nJ of running `task_type` on `cluster` for `exec_ns`
    /// (1 mW x 1 ns = 1e-3 nJ).
    pub fn energy_of(
        &self,
        task_type: TaskTypeId,
        cluster: ClusterId,
        exec_ns: f64,
    ) -> Result<f64, PlatformError> {
        if task_type >= self.profiles.len() {
            return Err(PlatformError::UnknownTaskType(task_type));
        }
        if cluster >= self.clusters.len() {
            return Err(PlatformError::UnknownCluster(cluster));
        }
        let entry = self
            .entry(task_type, cluster)
            .ok_or(PlatformError::Unsupported { task_type, cluster })?;
        Ok(entry.power_mw * exec_ns * 1e-3)
    }

    pub fn cpu_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.kind == ClusterKind::Cpu)
    }

    /// Cluster with the lowest id among the CPU clusters whose name is
    /// `big`, falling back to the first CPU cluster.
    pub fn big_cluster(&self) -> Option<ClusterId> {
        self.cpu_clusters()
            .find(|c| c.name == "big")
            .or_else(|| self.cpu_clusters().next())
            .map(|c| c.id)
    }
}

/// Checks a raw description and derives the PE list from the cluster sizes.
pub fn validate_platform(config: PlatformConfig) -> Result<Platform, ConfigError> {
    let mut violations = Vec::new();
    let n_clusters = config.clusters.len();

    if n_clusters == 0 {
        violations.push("platform has no clusters".to_string());
    }
    if !(config.comm.bytes_per_ns > 0.0 && config.comm.bytes_per_ns.is_finite()) {
        violations.push("comm.bytes_per_ns must be positive".to_string());
    }
    if !(config.comm.hop_latency_ns >= 0.0 && config.comm.hop_latency_ns.is_finite()) {
        violations.push("comm.hop_latency_ns must be non-negative".to_string());
    }

    let mut seen_ids = BTreeSet::new();
    let mut seen_mesh = BTreeSet::new();
    for c in &config.clusters {
        if !seen_ids.insert(c.id) {
            violations.push(format!("duplicate cluster id {}", c.id));
        }
        if c.id >= n_clusters {
            violations.push(format!("cluster id {} is not dense in 0..{}", c.id, n_clusters));
        }
        if c.pe_count == 0 {
            violations.push(format!("cluster {} has zero PEs", c.id));
        }
        if !seen_mesh.insert(c.mesh) {
            violations.push(format!(
                "cluster {} reuses mesh position {:?}",
                c.id, c.mesh
            ));
        }
    }

    let n_types = config.task_types.len();
    let mut seen_types = BTreeSet::new();
    for t in &config.task_types {
        if !seen_types.insert(t.id) {
            violations.push(format!("duplicate task type id {}", t.id));
        }
        if t.id >= n_types {
            violations.push(format!("task type id {} is not dense in 0..{}", t.id, n_types));
        }
        let mut supported = 0;
        let mut cpu_supported = false;
        let mut seen_clusters = BTreeSet::new();
        for p in &t.profiles {
            let Some(cluster) = config.clusters.iter().find(|c| c.id == p.cluster) else {
                violations.push(format!(
                    "task type {} references nonexistent cluster {}",
                    t.id, p.cluster
                ));
                continue;
            };
            if !seen_clusters.insert(p.cluster) {
                violations.push(format!(
                    "task type {} lists cluster {} twice",
                    t.id, p.cluster
                ));
            }
            if !(p.exec_ns > 0.0 && p.exec_ns.is_finite()) {
                violations.push(format!(
                    "task type {} has non-positive exec time on cluster {}",
                    t.id, p.cluster
                ));
            }
            if !(p.power_mw > 0.0 && p.power_mw.is_finite()) {
                violations.push(format!(
                    "task type {} has non-positive power on cluster {}",
                    t.id, p.cluster
                ));
            }
            supported += 1;
            cpu_supported |= cluster.kind == ClusterKind::Cpu;
        }
        if supported == 0 {
            violations.push(format!("task type {} has no supported cluster", t.id));
        } else if !cpu_supported {
            violations.push(format!("task type {} has no CPU fallback cluster", t.id));
        }
    }

    if !violations.is_empty() {
        return Err(ConfigError::invalid("platform", violations));
    }

    let mut cluster_cfgs = config.clusters;
    cluster_cfgs.sort_by_key(|c| c.id);
    let mut clusters = Vec::with_capacity(n_clusters);
    let mut pes = Vec::new();
    for c in cluster_cfgs {
        let first = pes.len();
        pes.extend((first..first + c.pe_count).map(|id| Pe { id, cluster: c.id }));
        clusters.push(Cluster {
            id: c.id,
            name: c.name,
            kind: c.kind,
            pe_count: c.pe_count,
            mesh: (c.mesh[0], c.mesh[1]),
            pes: (first..first + c.pe_count).collect(),
        });
    }

    let mut type_cfgs = config.task_types;
    type_cfgs.sort_by_key(|t| t.id);
    let profiles = type_cfgs
        .into_iter()
        .map(|t| {
            let mut entries = vec![None; n_clusters];
            for p in t.profiles {
                entries[p.cluster] = Some(ExecEntry {
                    exec_ns: p.exec_ns,
                    power_mw: p.power_mw,
                });
            }
            TaskProfile {
                id: t.id,
                name: t.name,
                entries,
            }
        })
        .collect();

    let hops = clusters
        .iter()
        .map(|a| {
            clusters
                .iter()
                .map(|b| a.mesh.0.abs_diff(b.mesh.0) + a.mesh.1.abs_diff(b.mesh.1))
                .collect()
        })
        .collect();

    Ok(Platform {
        name: config.name,
        clusters,
        pes,
        profiles,
        comm: config.comm,
        hops,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn one_pe_config() -> PlatformConfig {
        PlatformConfig {
            name: "tiny".into(),
            comm: CommModel {
                bytes_per_ns: 1.0,
                hop_latency_ns: 10.0,
            },
            clusters: vec![ClusterConfig {
                id: 0,
                name: "big".into(),
                kind: ClusterKind::Cpu,
                pe_count: 1,
                mesh: [0, 0],
            }],
            task_types: vec![TaskTypeConfig {
                id: 0,
                name: "t".into(),
                profiles: vec![ProfileEntry {
                    cluster: 0,
                    exec_ns: 100.0,
                    power_mw: 100.0,
                }],
            }],
        }
    }

    fn grid_config() -> PlatformConfig {
        let mut cfg = one_pe_config();
        cfg.clusters = vec![
            ClusterConfig {
                id: 0,
                name: "big".into(),
                kind: ClusterKind::Cpu,
                pe_count: 2,
                mesh: [0, 0],
            },
            ClusterConfig {
                id: 1,
                name: "acc".into(),
                kind: ClusterKind::Accelerator,
                pe_count: 1,
                mesh: [0, 1],
            },
            ClusterConfig {
                id: 2,
                name: "far".into(),
                kind: ClusterKind::Accelerator,
                pe_count: 1,
                mesh: [1, 1],
            },
        ];
        cfg
    }

    #[test]
    fn default_platform_has_19_pes_in_6_clusters() {
        let p = Platform::default_dssoc();
        assert_eq!(p.pes.len(), 19);
        assert_eq!(p.clusters.len(), 6);
        let sizes: Vec<_> = p.clusters.iter().map(|c| (c.name.as_str(), c.pe_count)).collect();
        assert_eq!(
            sizes,
            [("big", 4), ("little", 4), ("fft", 4), ("fir", 4), ("fec", 1), ("sap", 2)]
        );
        assert_eq!(p.pes.len(), p.clusters.iter().map(|c| c.pe_count).sum::<usize>());
    }

    #[test]
    fn minimal_platform_is_valid() {
        let p = validate_platform(one_pe_config()).unwrap();
        assert_eq!(p.pes.len(), 1);
        assert_eq!(p.clusters[0].pes, vec![0]);
    }

    #[test]
    fn nonexistent_cluster_is_rejected_with_task_type() {
        let mut cfg = one_pe_config();
        for id in 1..=7 {
            cfg.task_types.push(TaskTypeConfig {
                id,
                name: String::new(),
                profiles: vec![ProfileEntry {
                    cluster: 0,
                    exec_ns: 1.0,
                    power_mw: 1.0,
                }],
            });
        }
        cfg.task_types[7].profiles[0].cluster = 9;
        let err = validate_platform(cfg).unwrap_err().to_string();
        assert!(err.contains("task type 7"), "{err}");
    }

    #[test]
    fn duplicate_ids_and_zero_exec_are_rejected() {
        let mut cfg = one_pe_config();
        cfg.clusters.push(cfg.clusters[0].clone());
        cfg.task_types[0].profiles[0].exec_ns = 0.0;
        let ConfigError::Invalid { violations, .. } = validate_platform(cfg).unwrap_err() else {
            panic!("expected validation error");
        };
        assert!(violations.iter().any(|v| v.contains("duplicate cluster id 0")));
        assert!(violations.iter().any(|v| v.contains("non-positive exec time")));
    }

    #[test]
    fn zero_power_is_rejected() {
        let mut cfg = one_pe_config();
        cfg.task_types[0].profiles[0].power_mw = 0.0;
        assert!(validate_platform(cfg).is_err());
    }

    #[test]
    fn accelerator_only_type_is_rejected() {
        let mut cfg = grid_config();
        cfg.task_types[0].profiles[0].cluster = 1;
        let err = validate_platform(cfg).unwrap_err().to_string();
        assert!(err.contains("no CPU fallback"), "{err}");
    }

    #[test]
    fn comm_cost_examples() {
        let p = validate_platform(grid_config()).unwrap();
        // PEs 0 and 1 share cluster 0.
        assert_eq!(p.comm_cost(0, 1, 4096.0).unwrap(), 0.0);
        // (0,0) -> (1,1): two hops.
        assert_eq!(p.comm_cost(0, 3, 0.0).unwrap(), 20.0);
        // (0,0) -> (0,1): 1 hop x 10 ns + 1000 B / 1 B/ns.
        assert_eq!(p.comm_cost(0, 2, 1000.0).unwrap(), 1010.0);
        assert_eq!(p.comm_cost(0, 42, 1.0), Err(PlatformError::UnknownPe(42)));
    }

    #[test]
    fn energy_examples() {
        let mut cfg = one_pe_config();
        cfg.task_types.push(TaskTypeConfig {
            id: 1,
            name: String::new(),
            profiles: vec![ProfileEntry {
                cluster: 0,
                exec_ns: 400.0,
                power_mw: 250.0,
            }],
        });
        let p = validate_platform(cfg).unwrap();
        assert!((p.energy_of(0, 0, 1000.0).unwrap() - 100.0).abs() < 1e-12);
        assert!((p.energy_of(1, 0, 400.0).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(
            p.energy_of(0, 3, 1.0),
            Err(PlatformError::UnknownCluster(3))
        );
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PlatformConfig::from_toml(DEFAULT_PLATFORM).unwrap();
        let again = PlatformConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn comm_cost_symmetric_and_monotone(a in 0usize..19, b in 0usize..19, bytes in 0.0f64..1e6) {
                let p = Platform::default_dssoc();
                let ab = p.comm_cost(a, b, bytes).unwrap();
                prop_assert_eq!(ab, p.comm_cost(b, a, bytes).unwrap());
                prop_assert!(ab <= p.comm_cost(a, b, bytes + 1.0).unwrap());
            }

            #[test]
            fn energy_is_linear_in_exec_time(t in 0usize..12, x in 1.0f64..1e4, k in 1.0f64..8.0) {
                let p = Platform::default_dssoc();
                let c = p.profiles[t].supported_clusters().next().unwrap();
                let e1 = p.energy_of(t, c, x).unwrap();
                let ek = p.energy_of(t, c, k * x).unwrap();
                prop_assert!((ek - k * e1).abs() <= 1e-9 * ek.abs().max(1.0));
            }
        }
    }
}
