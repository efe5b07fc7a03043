use std::collections::BTreeMap;

use crate::schedulers::PolicyTag;

/// Scenario-level execution times of the fast and slow policies at one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub rate_mbps: f64,
    pub lut_exec_ns: f64,
    pub etf_exec_ns: f64,
}

/// Smallest rate at which ETF's mean execution time across scenarios beats
/// LUT's, or `None` if it never does.
pub fn fit_threshold(points: &[RatePoint]) -> Option<f64> {
    let mut by_rate: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    for p in points {
        let e = by_rate
            .entry(p.rate_mbps.to_bits())
            .or_insert((p.rate_mbps, 0.0, 0.0, 0));
        e.1 += p.lut_exec_ns;
        e.2 += p.etf_exec_ns;
        e.3 += 1;
    }
    let mut rates: Vec<_> = by_rate.into_values().collect();
    rates.sort_by(|a, b| a.0.total_cmp(&b.0));
    rates
        .into_iter()
        .find(|&(_, lut, etf, n)| etf / (n as f64) < lut / (n as f64))
        .map(|(rate, ..)| rate)
}

/// The boundary rate itself takes the slow path.
pub fn threshold_path(rate_mbps: f64, theta_mbps: f64) -> PolicyTag {
    if rate_mbps < theta_mbps {
        PolicyTag::Fast
    } else {
        PolicyTag::Slow
    }
}
