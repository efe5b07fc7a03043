use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use das_core::classifier::{
    accuracy, label_all, rank_features, read_samples, run_pipeline, train_tree, write_samples,
    DecisionTree, OracleOutcome, TrainingSample,
};
use das_core::engine::FeatureLayout;
use das_core::metrics::{compare as compare_metrics, reduce, write_distribution_csv, write_metrics_csv, SweepRow};
use das_core::schedulers::{fit_threshold, RatePoint};
use das_core::sweep::run_sweep;
use das_core::{run, Platform, Policy, PolicySpec, Scenario};
use log::info;
use serde::Serialize;

use crate::manifest::{write_run_record, Manifest};

fn out_dir(m: &Manifest) -> Result<PathBuf> {
    let dir = m.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Parses policy names; `das` alone takes the manifest's tree file. Every
/// name is checked and every tree loaded before anything runs.
fn policies(m: &Manifest, names: &[String]) -> Result<Vec<Policy>> {
    let specs = names
        .iter()
        .map(|n| match (n.as_str(), &m.tree) {
            ("das", Some(tree)) => Ok(PolicySpec::Das(tree.clone())),
            ("das", None) => Err(anyhow!("policy `das` needs a tree file: pass --tree or das:<file>")),
            _ => n.parse::<PolicySpec>().map_err(|e| anyhow!(e)),
        })
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        bail!("no policies given");
    }
    specs
        .iter()
        .map(|s| s.resolve().with_context(|| format!("loading policy {s:?}")))
        .collect()
}

fn inputs(m: &Manifest) -> Result<(Platform, das_core::AppLibrary, Vec<Scenario>)> {
    let platform = m.platform()?;
    let apps = m.apps(&platform)?;
    let scenarios = m.suite()?.scenarios();
    Ok((platform, apps, scenarios))
}

pub fn platform_show(m: &Manifest) -> Result<()> {
    let p = m.platform()?;
    println!("platform {}: {} clusters, {} PEs", p.name, p.clusters.len(), p.pes.len());
    for c in &p.clusters {
        println!(
            "  cluster {} {:<8} {:?} x{} at mesh ({}, {}), PEs {:?}",
            c.id, c.name, c.kind, c.pe_count, c.mesh.0, c.mesh.1, c.pes
        );
    }
    println!("task types:");
    for t in &p.profiles {
        let cells: Vec<String> = t
            .supported_clusters()
            .map(|c| {
                let e = t.entries[c].expect("supported cluster has an entry");
                format!("{}={}ns/{}mW", p.clusters[c].name, e.exec_ns, e.power_mw)
            })
            .collect();
        println!("  {:>2} {:<14} {}", t.id, t.name, cells.join(" "));
    }
    Ok(())
}

pub fn workload_gen(m: &Manifest) -> Result<()> {
    let platform = m.platform()?;
    let apps = m.apps(&platform)?;
    let suite = m.suite()?;
    let dir = out_dir(m)?;
    fs::write(dir.join("suite.toml"), suite.to_toml()).context("writing suite.toml")?;
    fs::write(dir.join("apps.toml"), apps.to_toml()).context("writing apps.toml")?;
    write_run_record(&dir, "workload gen", m)?;
    println!(
        "{} workloads x {} rates = {} scenarios, {} frames each -> {}",
        suite.workloads.len(),
        suite.rates_mbps.len(),
        suite.workloads.len() * suite.rates_mbps.len(),
        suite.frame_count,
        dir.display()
    );
    Ok(())
}

pub fn simulate(m: &Manifest, policy: &str, workload: usize, rate: Option<f64>) -> Result<()> {
    let policy = policies(m, &[policy.to_string()])?.remove(0);
    let platform = m.platform()?;
    let apps = m.apps(&platform)?;
    let mut suite = m.suite()?;
    if !suite.workloads.iter().any(|w| w.id == workload) {
        bail!("workload {workload} is not in the suite");
    }
    let rate = rate.unwrap_or(suite.rates_mbps[0]);
    // Off-ladder rates get a single-rate suite of their own.
    if !suite.rates_mbps.contains(&rate) {
        suite.rates_mbps = vec![rate];
    }
    let scenario = suite
        .scenarios()
        .into_iter()
        .find(|s| s.workload == workload && s.data_rate_mbps == rate)
        .expect("scenario exists for a suite workload and rate");
    let trace = run(&platform, &apps, &scenario, &policy, &m.engine)?;
    let metrics = reduce(&trace)?;
    let dir = out_dir(m)?;
    trace.write_csv(create(&dir, "trace.csv")?).context("writing trace.csv")?;
    let row = SweepRow {
        workload,
        rate_mbps: rate,
        policy: policy.name().to_string(),
        metrics,
    };
    write_metrics_csv(create(&dir, "metrics.csv")?, std::slice::from_ref(&row))?;
    write_run_record(&dir, "simulate", m)?;
    println!(
        "{} on workload {workload} at {rate} Mbps: {} jobs, avg exec {:.1} ns, energy {:.1} nJ, EDP {:.4e}, {} invocations, S fraction {:.3}",
        row.policy,
        metrics.jobs,
        metrics.avg_job_exec_ns,
        metrics.total_energy_nj,
        metrics.edp,
        metrics.invocations,
        metrics.slow_fraction()
    );
    Ok(())
}

pub fn sweep(m: &Manifest, names: &[String]) -> Result<()> {
    let policies = policies(m, names)?;
    let (platform, apps, scenarios) = inputs(m)?;
    info!("sweeping {} scenarios x {} policies", scenarios.len(), policies.len());
    let rows = run_sweep(&platform, &apps, &scenarios, &policies, &m.engine)?;
    let dir = out_dir(m)?;
    write_metrics_csv(create(&dir, "metrics.csv")?, &rows)?;
    write_distribution_csv(create(&dir, "distribution.csv")?, &rows)?;
    write_run_record(&dir, "sweep", m)?;
    println!("{:<10} {:>14} {:>14} {:>10}", "policy", "avg exec ns", "avg energy nJ", "S frac");
    for p in &policies {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.policy == p.name()).collect();
        let n = mine.len() as f64;
        println!(
            "{:<10} {:>14.1} {:>14.1} {:>10.3}",
            p.name(),
            mine.iter().map(|r| r.metrics.avg_job_exec_ns).sum::<f64>() / n,
            mine.iter().map(|r| r.metrics.total_energy_nj).sum::<f64>() / n,
            mine.iter().map(|r| r.metrics.slow_fraction()).sum::<f64>() / n,
        );
    }
    println!("{} rows -> {}", rows.len(), dir.display());
    Ok(())
}

fn write_outcomes(dir: &Path, scenarios: &[Scenario], outcomes: &[OracleOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "oracle.csv")?);
    w.write_record([
        "scenario",
        "workload",
        "rate_mbps",
        "samples",
        "pending",
        "resolved_to",
        "fast_avg_exec_ns",
        "slow_avg_exec_ns",
        "fast_edp",
        "slow_edp",
    ])?;
    for (i, (s, o)) in scenarios.iter().zip(outcomes).enumerate() {
        w.write_record([
            i.to_string(),
            s.workload.to_string(),
            s.data_rate_mbps.to_string(),
            o.samples.len().to_string(),
            o.pending.to_string(),
            o.resolved_to.tag().map_or("pending".into(), |t| t.to_string()),
            o.fast.avg_job_exec_ns.to_string(),
            o.slow.avg_job_exec_ns.to_string(),
            o.fast.edp.to_string(),
            o.slow.edp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ranking(dir: &Path, names: &[String], ranking: &[(usize, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "ranking.csv")?);
    w.write_record(["rank", "feature", "name", "importance"])?;
    for (rank, &(f, v)) in ranking.iter().enumerate() {
        w.write_record([(rank + 1).to_string(), f.to_string(), names[f].clone(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn label_counts(samples: &[TrainingSample]) -> (usize, usize) {
    let slow = samples
        .iter()
        .filter(|s| s.label == das_core::classifier::Label::Slow)
        .count();
    (samples.len() - slow, slow)
}

pub fn oracle(m: &Manifest) -> Result<()> {
    let (platform, apps, scenarios) = inputs(m)?;
    let outcomes = label_all(
        &platform,
        &apps,
        &scenarios,
        &m.engine,
        m.pipeline.metric,
        m.pipeline.agreement,
    )?;
    let samples: Vec<TrainingSample> = outcomes.iter().flat_map(|o| o.samples.iter().cloned()).collect();
    let names = FeatureLayout::for_platform(&platform).names().to_vec();
    let dir = out_dir(m)?;
    write_samples(create(&dir, "samples.csv")?, &names, &samples)?;
    write_outcomes(&dir, &scenarios, &outcomes)?;
    write_run_record(&dir, "oracle", m)?;
    let (f, s) = label_counts(&samples);
    println!(
        "{} samples from {} scenarios: {f} F, {s} S -> {}",
        samples.len(),
        scenarios.len(),
        dir.display()
    );
    Ok(())
}

fn load_samples(path: &Path) -> Result<(Vec<String>, Vec<TrainingSample>)> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_samples(f).with_context(|| format!("reading samples {}", path.display()))
}

pub fn train(m: &Manifest, samples_path: &Path) -> Result<()> {
    let (names, samples) = load_samples(samples_path)?;
    let ranking = rank_features(&samples).context("ranking features")?;
    let selected: Vec<usize> = ranking.iter().take(m.pipeline.top_k).map(|&(f, _)| f).collect();
    let tree = train_tree(&samples, m.pipeline.max_depth, &selected, &names).context("training")?;
    let acc = accuracy(&tree, &samples)?;
    let dir = out_dir(m)?;
    tree.save(&dir.join("tree.toml"))?;
    write_ranking(&dir, &names, &ranking)?;
    write_run_record(&dir, "train", m)?;
    let chosen: Vec<&str> = selected.iter().map(|&f| names[f].as_str()).collect();
    println!(
        "depth-{} tree on [{}]: training accuracy {:.4} over {} samples -> {}",
        m.pipeline.max_depth,
        chosen.join(", "),
        acc,
        samples.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    samples: usize,
    accuracy: f64,
    tree_depth: usize,
    tree_leaves: usize,
    features: Vec<String>,
}

pub fn eval(m: &Manifest, samples_path: &Path) -> Result<()> {
    let tree_path = m
        .tree
        .as_ref()
        .ok_or_else(|| anyhow!("eval needs a tree file: pass --tree"))?;
    let tree = DecisionTree::load(tree_path)?;
    let (names, samples) = load_samples(samples_path)?;
    let acc = accuracy(&tree, &samples)?;
    let report = EvalReport {
        samples: samples.len(),
        accuracy: acc,
        tree_depth: tree.depth(),
        tree_leaves: tree.leaf_count(),
        features: tree.used_features().iter().map(|&f| names[f].clone()).collect(),
    };
    let dir = out_dir(m)?;
    fs::write(dir.join("eval.toml"), toml::to_string(&report)?).context("writing eval.toml")?;
    write_run_record(&dir, "eval", m)?;
    println!(
        "accuracy {:.4} over {} samples (tree depth {}, features [{}])",
        acc,
        samples.len(),
        report.tree_depth,
        report.features.join(", ")
    );
    Ok(())
}

pub fn compare(m: &Manifest, baseline: &str, candidate: &str) -> Result<()> {
    let policies = policies(m, &[baseline.to_string(), candidate.to_string()])?;
    let (platform, apps, scenarios) = inputs(m)?;
    let rows = run_sweep(&platform, &apps, &scenarios, &policies, &m.engine)?;
    let dir = out_dir(m)?;
    let mut w = csv::Writer::from_writer(create(&dir, "compare.csv")?);
    w.write_record(["workload", "rate_mbps", "baseline", "candidate", "speedup", "edp_reduction_pct"])?;
    let (mut base_time, mut cand_time, mut base_edp, mut cand_edp) = (0.0, 0.0, 0.0, 0.0);
    for pair in rows.chunks(2) {
        let (b, c) = (&pair[0], &pair[1]);
        let cmp = compare_metrics(&b.metrics, &c.metrics)?;
        w.write_record([
            b.workload.to_string(),
            b.rate_mbps.to_string(),
            b.policy.clone(),
            c.policy.clone(),
            cmp.speedup.to_string(),
            cmp.edp_reduction_pct().to_string(),
        ])?;
        base_time += b.metrics.avg_job_exec_ns;
        cand_time += c.metrics.avg_job_exec_ns;
        base_edp += b.metrics.edp;
        cand_edp += c.metrics.edp;
    }
    w.flush()?;
    write_run_record(&dir, "compare", m)?;
    println!(
        "{} vs {} over {} points: {:.3}x speedup, {:.1}% lower EDP",
        policies[1].name(),
        policies[0].name(),
        rows.len() / 2,
        base_time / cand_time,
        (1.0 - cand_edp / base_edp) * 100.0
    );
    Ok(())
}

#[derive(Serialize)]
struct ThresholdReport {
    metric: das_core::classifier::TargetMetric,
    /// Absent when the slow path never wins.
    threshold_mbps: Option<f64>,
}

pub fn threshold_fit(m: &Manifest) -> Result<()> {
    let (platform, apps, scenarios) = inputs(m)?;
    let rows = run_sweep(&platform, &apps, &scenarios, &[Policy::Lut, Policy::Etf], &m.engine)?;
    let metric = m.pipeline.metric;
    let points: Vec<RatePoint> = rows
        .chunks(2)
        .map(|p| RatePoint {
            rate_mbps: p[0].rate_mbps,
            lut_exec_ns: metric.score(&p[0].metrics),
            etf_exec_ns: metric.score(&p[1].metrics),
        })
        .collect();
    let report = ThresholdReport {
        metric,
        threshold_mbps: fit_threshold(&points),
    };
    let dir = out_dir(m)?;
    fs::write(dir.join("threshold.toml"), toml::to_string(&report)?).context("writing threshold.toml")?;
    write_run_record(&dir, "threshold fit", m)?;
    match report.threshold_mbps {
        Some(t) => println!("threshold {t} Mbps (use policy threshold:{t})"),
        None => println!("the slow path never wins; the heuristic stays on the fast path"),
    }
    Ok(())
}

#[derive(Serialize)]
struct PipelineSummary {
    samples: usize,
    fast_labels: usize,
    slow_labels: usize,
    train_samples: usize,
    test_samples: usize,
    selected_features: Vec<String>,
    train_accuracy: f64,
    test_accuracy: f64,
    threshold_mbps: Option<f64>,
    tree_depth: usize,
}

pub fn pipeline(m: &Manifest) -> Result<()> {
    let (platform, apps, scenarios) = inputs(m)?;
    let report = run_pipeline(&platform, &apps, &scenarios, &m.engine, &m.pipeline)?;
    let dir = out_dir(m)?;
    let names = &report.feature_names;
    write_samples(create(&dir, "samples.csv")?, names, &report.samples)?;
    write_outcomes(&dir, &scenarios, &report.outcomes)?;
    write_ranking(&dir, names, &report.ranking)?;
    report.tree.save(&dir.join("tree.toml"))?;
    let (fast, slow) = label_counts(&report.samples);
    let summary = PipelineSummary {
        samples: report.samples.len(),
        fast_labels: fast,
        slow_labels: slow,
        train_samples: report.train_len,
        test_samples: report.test_len,
        selected_features: report.selected.iter().map(|&f| names[f].clone()).collect(),
        train_accuracy: report.train_accuracy,
        test_accuracy: report.test_accuracy,
        threshold_mbps: report.threshold_mbps,
        tree_depth: report.tree.depth(),
    };
    fs::write(dir.join("report.toml"), toml::to_string(&summary)?).context("writing report.toml")?;
    write_run_record(&dir, "pipeline", m)?;
    println!("{} samples ({fast} F, {slow} S)", summary.samples);
    println!("top features:");
    for (f, v) in report.ranking.iter().take(5) {
        println!("  {:<24} {:.4}", names[*f], v);
    }
    println!(
        "tree on [{}]: train {:.4}, held-out {:.4}",
        summary.selected_features.join(", "),
        summary.train_accuracy,
        summary.test_accuracy
    );
    if let Some(t) = summary.threshold_mbps {
        println!("threshold heuristic: {t} Mbps");
    }
    println!("artifacts -> {}", dir.display());
    Ok(())
}
