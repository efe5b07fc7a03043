mod support;

use std::sync::Arc;

use das_core::classifier::DecisionTree;
use das_core::engine::{
    run, CaptureInput, EngineConfig, FeatureLayout, FeatureSnapshot, OverheadModel, RateConfig,
    RateTracker,
};
use das_core::schedulers::{LutPolicy, Policy, PolicyTag};
use das_core::workload::{default_suite, synth_app_library, ArrivalModel, Scenario};
use das_core::{Platform, SimError};
use support::*;

fn scenario(rate_mbps: f64, frames: usize, mix: Vec<(usize, f64)>) -> Scenario {
    Scenario {
        workload: 0,
        mix,
        data_rate_mbps: rate_mbps,
        frame_count: frames,
        seed: 11,
        arrival: ArrivalModel::Periodic,
    }
}

fn constant(tag: PolicyTag) -> Policy {
    Policy::Das(Arc::new(DecisionTree::constant(tag)))
}

#[test]
fn single_node_latency_is_overhead_plus_exec() {
    let platform = one_pe(100.0, 100.0);
    let lib = app(&[0], &[], 1000.0);
    let s = scenario(100.0, 1, vec![(0, 1.0)]);
    let config = EngineConfig::default();
    let cases = [
        (Policy::Lut, 6.0),
        (Policy::Etf, 52.0),
        (Policy::EtfIdeal, 0.0),
        (constant(PolicyTag::Fast), 6.0),
        (constant(PolicyTag::Slow), 52.0),
        (Policy::Threshold(1e9), 6.0),
    ];
    for (policy, overhead) in cases {
        let trace = run(&platform, &lib, &s, &policy, &config).unwrap();
        assert_eq!(trace.decisions.len(), 1, "{}", policy.name());
        assert_eq!(trace.jobs[0].latency_ns(), overhead + 100.0, "{}", policy.name());
        assert_eq!(trace.sched_latency_ns, overhead);
    }
}

#[test]
fn fast_path_charges_six_ns_and_2_3_nj() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let s = scenario(100.0, 4, vec![(0, 1.0)]);
    let config = EngineConfig::default();
    let lut = run(&platform, &lib, &s, &Policy::Lut, &config).unwrap();
    assert!(lut.invocations > 0);
    for d in &lut.decisions {
        assert_eq!((d.overhead_ns, d.overhead_nj), (6.0, 2.3));
    }
    let das = run(&platform, &lib, &s, &constant(PolicyTag::Fast), &config).unwrap();
    for d in &das.decisions {
        assert_eq!(d.overhead_ns, 6.0);
        assert!((d.overhead_nj - 4.2).abs() < 1e-12);
    }
}

#[test]
fn ideal_slow_path_is_free() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let s = scenario(2000.0, 10, vec![(2, 0.5), (4, 0.5)]);
    let trace = run(&platform, &lib, &s, &Policy::EtfIdeal, &EngineConfig::default()).unwrap();
    assert_eq!(trace.sched_latency_ns, 0.0);
    assert_eq!(trace.sched_energy_nj, 0.0);
}

#[test]
fn slow_invocation_charges_once_by_queue_length() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let s = scenario(3000.0, 10, vec![(2, 1.0)]);
    let model = OverheadModel::default();
    let trace = run(&platform, &lib, &s, &Policy::Etf, &EngineConfig::default()).unwrap();
    let mut seen = std::collections::HashSet::new();
    for d in &trace.decisions {
        if seen.insert(d.invocation) {
            assert_eq!(d.overhead_ns, model.slow_latency(d.ready_len));
            assert!((d.overhead_nj - 0.4 * model.slow_latency(d.ready_len)).abs() < 1e-9);
        } else {
            assert_eq!((d.overhead_ns, d.overhead_nj), (0.0, 0.0));
        }
    }
    assert_eq!(model.slow_latency(4), 112.0);
}

#[test]
fn runs_are_bit_identical() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let s = scenario(1500.0, 20, vec![(0, 0.3), (1, 0.3), (3, 0.4)]);
    let config = EngineConfig::default();
    for policy in [Policy::Lut, Policy::Etf, constant(PolicyTag::Slow)] {
        let a = run(&platform, &lib, &s, &policy, &config).unwrap();
        let b = run(&platform, &lib, &s, &policy, &config).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn chain_respects_precedence() {
    let platform = one_pe(100.0, 100.0);
    let lib = app(&[0, 0], &[(0, 1, 64.0)], 1000.0);
    let s = scenario(100.0, 3, vec![(0, 1.0)]);
    for policy in [Policy::Lut, Policy::Etf] {
        let trace = run(&platform, &lib, &s, &policy, &EngineConfig::default()).unwrap();
        for job in 0..3 {
            let a = trace.tasks.iter().find(|t| t.job == job && t.node == 0).unwrap();
            let b = trace.tasks.iter().find(|t| t.job == job && t.node == 1).unwrap();
            assert!(b.start_ns >= a.finish_ns);
        }
        assert!(trace_violations(&platform, &lib, &trace).is_empty());
    }
}

#[test]
fn ideal_equals_slow_path_without_overhead() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let zero = EngineConfig {
        overhead: OverheadModel::zero(),
        ..EngineConfig::default()
    };
    for s in default_suite(3, 5).scenarios().iter().step_by(3) {
        let s = Scenario {
            frame_count: 12,
            ..s.clone()
        };
        let ideal = run(&platform, &lib, &s, &Policy::EtfIdeal, &EngineConfig::default()).unwrap();
        let mut etf = run(&platform, &lib, &s, &Policy::Etf, &zero).unwrap();
        etf.policy = ideal.policy.clone();
        assert_eq!(ideal, etf);
    }
}

#[test]
fn constant_trees_reduce_to_the_fixed_policies() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let config = EngineConfig::default();
    for s in default_suite(4, 9).scenarios().iter().step_by(4) {
        let s = Scenario {
            frame_count: 15,
            ..s.clone()
        };
        for (tag, fixed) in [(PolicyTag::Fast, Policy::Lut), (PolicyTag::Slow, Policy::Etf)] {
            let das = run(&platform, &lib, &s, &constant(tag), &config).unwrap();
            let base = run(&platform, &lib, &s, &fixed, &config).unwrap();
            assert_eq!(das.decisions.len(), base.decisions.len());
            for (a, b) in das.decisions.iter().zip(&base.decisions) {
                let energy = if a.overhead_ns > 0.0 || a.overhead_nj > 0.0 {
                    b.overhead_nj + config.overhead.classifier_energy_nj
                } else {
                    0.0
                };
                assert_eq!(
                    (a.task, a.pe, a.start_ns, a.finish_ns, a.path, a.overhead_ns),
                    (b.task, b.pe, b.start_ns, b.finish_ns, b.path, b.overhead_ns)
                );
                assert!((a.overhead_nj - energy).abs() < 1e-9);
            }
            assert_eq!(das.jobs, base.jobs);
            assert_eq!(das.tasks, base.tasks);
        }
    }
}

#[test]
fn invariants_hold_across_policies() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let config = EngineConfig::default();
    let policies = [
        Policy::Lut,
        Policy::Etf,
        Policy::EtfIdeal,
        Policy::Threshold(1000.0),
    ];
    let mut suite = default_suite(3, 21);
    suite.frame_count = 15;
    suite.rates_mbps = vec![150.0, 1200.0, 3500.0];
    for s in suite.scenarios() {
        for p in &policies {
            let trace = run(&platform, &lib, &s, p, &config).unwrap();
            let bad = trace_violations(&platform, &lib, &trace);
            assert!(bad.is_empty(), "{} at {}: {bad:?}", p.name(), s.data_rate_mbps);
        }
    }
}

#[test]
fn poisson_runs_complete() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let mut s = scenario(2000.0, 20, vec![(0, 0.5), (4, 0.5)]);
    s.arrival = ArrivalModel::Poisson;
    let trace = run(&platform, &lib, &s, &Policy::Lut, &EngineConfig::default()).unwrap();
    assert_eq!(trace.jobs.len(), 20);
    assert!(trace_violations(&platform, &lib, &trace).is_empty());
}

#[test]
fn event_cap_is_enforced() {
    let platform = Platform::default_dssoc();
    let lib = synth_app_library();
    let s = scenario(500.0, 5, vec![(0, 1.0)]);
    let config = EngineConfig {
        event_cap: 10,
        ..EngineConfig::default()
    };
    assert!(matches!(
        run(&platform, &lib, &s, &Policy::Lut, &config),
        Err(SimError::EventCapExceeded(10))
    ));
}

#[test]
fn tree_wider_than_the_snapshot_is_rejected() {
    let platform = one_pe(100.0, 100.0);
    let lib = app(&[0], &[], 1000.0);
    let text = "schema_version = 1\nmax_depth = 1\nfeatures = [500]\n\n[[nodes]]\nkind = \"split\"\nfeature = 500\nthreshold = 1.0\nleft = 1\nright = 2\n\n[[nodes]]\nkind = \"leaf\"\nlabel = \"F\"\n\n[[nodes]]\nkind = \"leaf\"\nlabel = \"S\"\n";
    let tree = DecisionTree::from_toml(text).unwrap();
    let err = run(
        &platform,
        &lib,
        &scenario(100.0, 1, vec![(0, 1.0)]),
        &Policy::Das(Arc::new(tree)),
        &EngineConfig::default(),
    );
    assert!(err.is_err());
}

fn capture(platform: &Platform, now: f64, busy: &[f64]) -> FeatureSnapshot {
    let lut = LutPolicy::from_platform(platform);
    let intervals: Vec<Vec<(f64, f64)>> = busy
        .iter()
        .map(|&b| if b > 0.0 { vec![(0.0, b)] } else { Vec::new() })
        .collect();
    FeatureSnapshot::capture(&CaptureInput {
        platform,
        lut: &lut,
        now,
        rate_mbps: 0.0,
        busy,
        intervals: &intervals,
        util_window_ns: 1000.0,
        tasks: &[],
        head: None,
    })
}

#[test]
fn idle_snapshot() {
    let p = Platform::default_dssoc();
    let s = capture(&p, 250.0, &vec![0.0; p.pes.len()]);
    assert!(s.pe_ready.iter().all(|&t| t == 250.0));
    assert!(s.cluster_ready.iter().all(|&t| t == 250.0));
    assert!(s.pe_utilization.iter().all(|&u| u == 0.0));
    let layout = FeatureLayout::for_platform(&p);
    let v = s.to_vector(&layout);
    assert_eq!(v.len(), 63);
    assert_eq!(layout.len(), 63);
    assert_eq!(layout.name(0), "rate_mbps");
    assert_eq!(layout.index_of("wait_cluster_big"), Some(1));
    assert_eq!(layout.index_of("exec_big"), Some(51));
}

#[test]
fn busy_pe_snapshot() {
    let p = Platform::default_dssoc();
    let mut busy = vec![0.0; p.pes.len()];
    busy[3] = 500.0;
    let s = capture(&p, 100.0, &busy);
    assert_eq!(s.pe_ready[3], 500.0);
    // cluster availability is the earliest of its PEs
    let big = &p.clusters[p.pes[3].cluster];
    let want = big.pes.iter().map(|&q| s.pe_ready[q]).fold(f64::INFINITY, f64::min);
    assert_eq!(s.cluster_ready[big.id], want);
    assert_eq!(want, 100.0);
    for &q in &big.pes {
        busy[q] = 500.0 + q as f64;
    }
    let s = capture(&p, 100.0, &busy);
    assert_eq!(s.cluster_ready[big.id], 500.0);
    assert!((s.pe_utilization[3] - 0.1).abs() < 1e-12);
}

#[test]
fn rate_register_reads_back_constant_injection() {
    let cfg = RateConfig {
        window_ns: 1000.0,
        scale_bits: 1.0,
    };
    let mut r = RateTracker::new(cfg);
    for w in 0..8 {
        r.update(1000.0, w as f64 * 1000.0 + 1.0);
    }
    r.advance(8000.0 - 1.0);
    assert!((r.estimate_mbps() - 1000.0).abs() < 1e-9);
}
