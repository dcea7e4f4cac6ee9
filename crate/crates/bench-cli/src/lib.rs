//! Benchmark harness for the `hpmc` samplers.
//!
//! An [`ExperimentSpec`] names a target, a list of sampler variants sharing a
//! budget of target evaluations, a replicate count and the metrics to report.
//! [`run_experiment`] runs every variant over seeded replicates and
//! aggregates MSE rows; [`audit_experiment`] checks evaluation counters
//! against the complexity formulas; [`run_sweep`] repeats an experiment over
//! target dimensions.

pub mod audit;
pub mod error;
pub mod experiment;
pub mod output;
pub mod spec;

pub use audit::{audit_experiment, verify_counters, AuditEntry, AuditReport};
pub use error::{BenchError, Result};
pub use experiment::{compute_mse, run_experiment, run_sweep, Mse, ResultRow};
pub use output::{emit_plot_data, emit_results, read_results};
pub use spec::{EpsilonScope, ExperimentSpec, Format, Metric, Variant};

/// Thread pool with `threads` workers, or rayon's default when `None`.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(BenchError::Spec("--threads must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| BenchError::Spec(e.to_string()))
}
