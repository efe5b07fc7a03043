//! Discrete-event simulation of a heterogeneous SoC running streaming
//! dataflow applications, with fast (lookup-table), slow (earliest finish
//! time) and classifier-selected scheduling.

pub mod classifier;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod platform;
pub mod schedulers;
pub mod sweep;
pub mod workload;

pub use engine::{run, run_with_probe, EngineConfig, SimTrace};
pub use error::{ClassifierError, ConfigError, MetricsError, PlatformError, SimError, WorkloadError};
pub use platform::Platform;
pub use schedulers::{Policy, PolicySpec, PolicyTag};
pub use workload::{AppLibrary, Scenario, Suite};
