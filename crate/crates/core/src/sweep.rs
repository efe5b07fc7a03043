//! Scenario sweeps. With the `parallel` feature, independent simulations run
//! on a rayon pool; without it they run in order on the calling thread.
//! Results are identical either way.

use crate::engine::{run, EngineConfig};
use crate::error::SimError;
use crate::metrics::{reduce, SweepRow};
use crate::platform::Platform;
use crate::schedulers::Policy;
use crate::workload::{AppLibrary, Scenario};

/// Environment variable that caps the worker pool size.
pub const WORKERS_ENV: &str = "DAS_WORKERS";

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    with_pool(|| items.par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    seq_map(items, f)
}

/// Sequential reference for [`par_map`].
pub fn seq_map<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    use std::sync::OnceLock;
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    let pool = POOL.get_or_init(|| {
        let n: usize = std::env::var(WORKERS_ENV).ok()?.parse().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    });
    match pool {
        Some(p) => p.install(op),
        None => op(),
    }
}

/// Simulates every `(scenario, policy)` pair. Rows come back ordered by
/// workload, then rate, then the position of the policy in `policies`.
pub fn run_sweep(
    platform: &Platform,
    library: &AppLibrary,
    scenarios: &[Scenario],
    policies: &[Policy],
    config: &EngineConfig,
) -> Result<Vec<SweepRow>, SimError> {
    sweep_with(platform, library, scenarios, policies, config, true)
}

/// [`run_sweep`] forced onto the calling thread.
pub fn run_sweep_sequential(
    platform: &Platform,
    library: &AppLibrary,
    scenarios: &[Scenario],
    policies: &[Policy],
    config: &EngineConfig,
) -> Result<Vec<SweepRow>, SimError> {
    sweep_with(platform, library, scenarios, policies, config, false)
}

fn sweep_with(
    platform: &Platform,
    library: &AppLibrary,
    scenarios: &[Scenario],
    policies: &[Policy],
    config: &EngineConfig,
    parallel: bool,
) -> Result<Vec<SweepRow>, SimError> {
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..policies.len()).map(move |p| (s, p)))
        .collect();
    let one = |&(s, p): &(usize, usize)| -> Result<(usize, SweepRow), SimError> {
        let scenario = &scenarios[s];
        let trace = run(platform, library, scenario, &policies[p], config)?;
        let metrics = reduce(&trace)?;
        Ok((
            p,
            SweepRow {
                workload: scenario.workload,
                rate_mbps: scenario.data_rate_mbps,
                policy: policies[p].name().to_string(),
                metrics,
            },
        ))
    };
    let results = if parallel {
        par_map(&jobs, one)
    } else {
        seq_map(&jobs, one)
    };
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|(pa, a), (pb, b)| {
        a.workload
            .cmp(&b.workload)
            .then(a.rate_mbps.total_cmp(&b.rate_mbps))
            .then(pa.cmp(pb))
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}
