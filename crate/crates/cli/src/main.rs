mod commands;
mod manifest;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use das_core::classifier::{Agreement, TargetMetric};

use manifest::Manifest;

/// Simulator, oracle and classifier pipeline for adaptive fast/slow
/// scheduling on heterogeneous SoCs.
///
/// Set DAS_WORKERS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "das", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Inputs shared by every command. Flags override the manifest.
#[derive(Debug, Args)]
struct Common {
    /// TOML run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Platform description (default: the shipped 19-PE DSSoC).
    #[arg(long, global = true)]
    platform: Option<PathBuf>,
    /// Application library (default: the five built-in applications).
    #[arg(long, global = true)]
    apps: Option<PathBuf>,
    /// Workload suite (default: generated from --seed and --workloads).
    #[arg(long, global = true)]
    suite: Option<PathBuf>,
    /// Decision-tree file used by the `das` policy.
    #[arg(long, global = true)]
    tree: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of workloads in the generated suite.
    #[arg(long, global = true)]
    workloads: Option<usize>,
    /// Frames injected per scenario.
    #[arg(long, global = true)]
    frames: Option<usize>,
    /// Comma-separated data rates in Mbps, replacing the suite's ladder.
    #[arg(long, global = true, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Oracle target metric.
    #[arg(long, global = true, value_parser = parse_metric)]
    metric: Option<TargetMetric>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Platform inspection.
    #[command(subcommand)]
    Platform(PlatformCmd),
    /// Workload generation.
    #[command(subcommand)]
    Workload(WorkloadCmd),
    /// Runs one scenario and writes its trace and metrics.
    Simulate {
        #[arg(long, default_value = "lut")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        workload: usize,
        /// Data rate in Mbps (default: the first rate of the suite).
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Runs every (scenario, policy) pair and writes metrics and decision
    /// distributions.
    Sweep {
        /// Policies: lut, etf, etf-ideal, das (with --tree), das:<file>,
        /// threshold:<mbps>.
        #[arg(long, value_delimiter = ',', default_value = "lut,etf,etf-ideal")]
        policy: Vec<String>,
    },
    /// Labels scheduler invocations with the two-run oracle.
    Oracle {
        #[arg(long, value_parser = parse_agreement)]
        agreement: Option<Agreement>,
    },
    /// Ranks features and trains a decision tree on a samples file.
    Train {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Accuracy of the --tree file on a samples file.
    Eval {
        #[arg(long)]
        samples: PathBuf,
    },
    /// Speedup and EDP of a candidate policy against a baseline.
    Compare {
        #[arg(long, default_value = "lut")]
        baseline: String,
        #[arg(long)]
        candidate: String,
    },
    /// Rate-threshold heuristic.
    #[command(subcommand)]
    Threshold(ThresholdCmd),
    /// Oracle, ranking, training and held-out evaluation in one run.
    Pipeline {
        #[arg(long, value_parser = parse_agreement)]
        agreement: Option<Agreement>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum PlatformCmd {
    /// Prints clusters, PEs and task profiles.
    Show,
}

#[derive(Debug, Subcommand)]
enum WorkloadCmd {
    /// Writes the suite and application library that commands would use.
    Gen,
}

#[derive(Debug, Subcommand)]
enum ThresholdCmd {
    /// Fits the lowest rate at which the slow path wins.
    Fit,
}

fn parse_metric(s: &str) -> Result<TargetMetric, String> {
    s.parse()
}

fn parse_agreement(s: &str) -> Result<Agreement, String> {
    s.parse()
}

fn manifest(common: &Common) -> Result<Manifest> {
    let mut m = match &common.manifest {
        Some(p) => Manifest::load(p)?,
        None => Manifest::default(),
    };
    macro_rules! take {
        ($($field:ident),*) => {
            $(if let Some(v) = &common.$field { m.$field = Some(v.clone()); })*
        };
    }
    take!(platform, apps, suite, tree, seed, workloads, frames, rates, out);
    if let Some(metric) = common.metric {
        m.pipeline.metric = metric;
    }
    m.check_inputs()?;
    Ok(m)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut m = manifest(&cli.common)?;
    match cli.command {
        Command::Platform(PlatformCmd::Show) => commands::platform_show(&m),
        Command::Workload(WorkloadCmd::Gen) => commands::workload_gen(&m),
        Command::Simulate {
            policy,
            workload,
            rate,
        } => commands::simulate(&m, &policy, workload, rate),
        Command::Sweep { policy } => commands::sweep(&m, &policy),
        Command::Oracle { agreement } => {
            if let Some(a) = agreement {
                m.pipeline.agreement = a;
            }
            commands::oracle(&m)
        }
        Command::Train {
            samples,
            depth,
            top_k,
        } => {
            m.pipeline.max_depth = depth.unwrap_or(m.pipeline.max_depth);
            m.pipeline.top_k = top_k.unwrap_or(m.pipeline.top_k);
            commands::train(&m, &samples)
        }
        Command::Eval { samples } => commands::eval(&m, &samples),
        Command::Compare {
            baseline,
            candidate,
        } => commands::compare(&m, &baseline, &candidate),
        Command::Threshold(ThresholdCmd::Fit) => commands::threshold_fit(&m),
        Command::Pipeline {
            agreement,
            depth,
            top_k,
        } => {
            if let Some(a) = agreement {
                m.pipeline.agreement = a;
            }
            m.pipeline.max_depth = depth.unwrap_or(m.pipeline.max_depth);
            m.pipeline.top_k = top_k.unwrap_or(m.pipeline.top_k);
            commands::pipeline(&m)
        }
    }
}
