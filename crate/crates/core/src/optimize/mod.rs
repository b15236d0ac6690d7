//! Placement search: exhaustive enumeration and the Cross-Entropy method.

mod brute;
mod ce;
mod distribution;
mod evaluate;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::grid::GridError;

pub use brute::{brute_force_search, BruteForceOutcome};
pub use ce::{
    ce_sample, ce_search, ce_update, elite_size, elite_threshold, sample_rng, CeConfig,
    CeIteration, CeOutcome, CeState, EliteSelection,
};
pub use distribution::{count_distributions, enumerate_distributions, Distribution, Enumeration};
pub use evaluate::{EvaluationRecord, Evaluator, Workers};

/// Default cap on brute-force evaluations.
pub const DEFAULT_BRUTE_BUDGET: u64 = 100_000;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solution count C({n} + {units} - 1, {units}) overflows 64 bits")]
    Overflow { n: usize, units: u32 },
    #[error(
        "brute force needs {count} evaluations, budget is {budget}; \
         complexity ratio against the CE settings is {ratio:.2}, use the CE method"
    )]
    BudgetExceeded { count: u64, budget: u64, ratio: f64 },
    #[error("no iterations were run, so there is no incumbent")]
    EmptyIncumbent { q_final: Vec<f64> },
    #[error("invalid CE configuration: {0}")]
    InvalidConfig(String),
    #[error("network reduction failed for {distribution}: {source}")]
    Grid {
        distribution: String,
        #[source]
        source: GridError,
    },
    #[error("simulation failed for {distribution}: {source}")]
    Dynamics {
        distribution: String,
        #[source]
        source: DynamicsError,
    },
}

/// Exhaustive space size over total CE evaluations, `C(n+n_S-1, n_S) / (N |X|)`.
pub fn complexity_ratio(
    n: usize,
    n_s: u32,
    n_iter: u32,
    samples: u32,
) -> Result<f64, OptimizeError> {
    let evaluations = u64::from(n_iter)
        .checked_mul(u64::from(samples))
        .filter(|&e| e > 0)
        .ok_or_else(|| OptimizeError::InvalidArgument("N_iter and |X| must be positive".into()))?;
    Ok(count_distributions(n, n_s)? as f64 / evaluations as f64)
}
