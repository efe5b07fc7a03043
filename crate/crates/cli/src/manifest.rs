//! Run manifests: every input a command reads, resolved from a TOML file and
//! command-line overrides, plus the `run.toml` record written next to the
//! outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use das_core::classifier::PipelineConfig;
use das_core::engine::EngineConfig;
use das_core::workload::{default_suite, synth_app_library};
use das_core::{AppLibrary, Platform, Suite};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_WORKLOADS: usize = 40;
pub const DEFAULT_OUT: &str = "das-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub platform: Option<PathBuf>,
    pub apps: Option<PathBuf>,
    pub suite: Option<PathBuf>,
    pub tree: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Workload count for the generated suite; ignored with `suite`.
    pub workloads: Option<usize>,
    pub frames: Option<usize>,
    pub rates: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub engine: EngineConfig,
    pub pipeline: PipelineConfig,
}

impl Manifest {
    /// Reads a manifest; relative paths inside it are taken relative to the
    /// manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: Manifest =
            toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut m.platform, &mut m.apps, &mut m.suite, &mut m.tree, &mut m.out] {
            if let Some(rel) = p.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        Ok(m)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Fails if a referenced input file is missing.
    pub fn check_inputs(&self) -> Result<()> {
        for (what, p) in self.inputs() {
            if !p.is_file() {
                bail!("{what} file {} does not exist", p.display());
            }
        }
        Ok(())
    }

    fn inputs(&self) -> Vec<(&'static str, &Path)> {
        [
            ("platform", &self.platform),
            ("apps", &self.apps),
            ("suite", &self.suite),
            ("tree", &self.tree),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_deref().map(|p| (k, p)))
        .collect()
    }

    pub fn platform(&self) -> Result<Platform> {
        match &self.platform {
            Some(p) => Platform::from_file(p).with_context(|| format!("loading platform {}", p.display())),
            None => Ok(Platform::default_dssoc()),
        }
    }

    pub fn apps(&self, platform: &Platform) -> Result<AppLibrary> {
        let lib = match &self.apps {
            Some(p) => AppLibrary::from_file(p).with_context(|| format!("loading apps {}", p.display()))?,
            None => synth_app_library(),
        };
        lib.check_against(platform).context("app library does not fit the platform")?;
        Ok(lib)
    }

    /// The suite file if given, otherwise the generated default suite. Seed,
    /// frame count and rates from the manifest override the file's values.
    pub fn suite(&self) -> Result<Suite> {
        let mut suite = match &self.suite {
            Some(p) => Suite::from_file(p).with_context(|| format!("loading suite {}", p.display()))?,
            None => default_suite(self.workloads.unwrap_or(DEFAULT_WORKLOADS), self.seed()),
        };
        if let Some(seed) = self.seed {
            suite.seed = seed;
        }
        if let Some(frames) = self.frames {
            if frames == 0 {
                bail!("frame count must be positive");
            }
            suite.frame_count = frames;
        }
        if let Some(rates) = &self.rates {
            if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                bail!("rates must be a non-empty list of positive numbers");
            }
            suite.rates_mbps = rates.clone();
        }
        Ok(suite)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.to_toml().as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Contents of `run.toml`.
#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    seed: u64,
    manifest_sha256: String,
    /// SHA-256 of each input file by role.
    inputs: BTreeMap<&'static str, String>,
    manifest: &'a Manifest,
}

pub fn write_run_record(dir: &Path, command: &str, manifest: &Manifest) -> Result<()> {
    let mut inputs = BTreeMap::new();
    for (what, p) in manifest.inputs() {
        let bytes = fs::read(p).with_context(|| format!("hashing {}", p.display()))?;
        inputs.insert(what, hex(&Sha256::digest(&bytes)));
    }
    let record = RunRecord {
        command,
        seed: manifest.seed(),
        manifest_sha256: manifest.sha256(),
        inputs,
        manifest,
    };
    let text = toml::to_string(&record).context("serializing run record")?;
    fs::write(dir.join("run.toml"), text).context("writing run.toml")?;
    Ok(())
}
