//! Synthetic data, metrics and reproducibility harnesses.

pub mod changepoint;
pub mod harness;
pub mod metrics;
pub mod probe;

pub use changepoint::{generate_changepoint, ChangepointSpec, Features, Segment};
pub use harness::{ChangepointExperiment, ExperimentReport, ForecasterKind, MethodSummary, SeedRun, SeedSummary};
pub use metrics::{
    coverage_metrics, default_grid, regret, uniform_grid, width_deviation, CoverageSummary, MetricsReport, RegretReport,
};
pub use probe::{theorem_probe, Adversary, Invariant, InvariantCheck, ProbeConfig, ProbeReport, ProbeRow};
