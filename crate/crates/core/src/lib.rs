//! Placement of droop-controlled storage inverters on a transmission grid
//! to minimise the generator frequency nadir after a generation loss.
//!
//! - [`grid`]: grid files, admittance matrices and network reduction.
//! - [`dynamics`]: state-space assembly, RK4 simulation, frequency metrics.
//! - [`sizing`]: total storage droop capacity from a steady-state limit.
//! - [`optimize`]: exhaustive and Cross-Entropy placement search.
//! - [`cli`]: configuration, orchestration and report files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod grid;
pub mod optimize;
pub mod report;
pub mod sizing;
pub mod textfmt;

use thiserror::Error;

/// Top-level failure, grouped by the process exit code it maps to.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Sizing(#[from] sizing::SizingError),
    #[error(transparent)]
    Optimize(#[from] optimize::OptimizeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 2 configuration, 3 numerical failure, 4 brute-force budget exceeded.
    pub fn exit_code(&self) -> i32 {
        use dynamics::DynamicsError as D;
        use grid::GridError as G;
        use optimize::OptimizeError as O;
        let numerical_grid = |e: &G| matches!(e, G::SingularLoadBlock { .. });
        let numerical_dyn =
            |e: &D| matches!(e, D::Unstable { .. } | D::Numerical(_) | D::EmptyTrace);
        match self {
            Error::Optimize(O::BudgetExceeded { .. }) => 4,
            Error::Optimize(O::Grid { source, .. }) if numerical_grid(source) => 3,
            Error::Optimize(O::Dynamics { source, .. }) if numerical_dyn(source) => 3,
            Error::Grid(e) if numerical_grid(e) => 3,
            Error::Dynamics(e) if numerical_dyn(e) => 3,
            _ => 2,
        }
    }
}
