//! Grid description, admittance assembly and network reduction.

mod file;
mod model;
mod network;

use thiserror::Error;

use crate::textfmt::SyntaxError;

pub use file::{parse_grid, serialize_grid};
pub use model::{Bases, Bus, BusId, BusKind, GeneratorParams, GridModel, LineSpec, LoadSpec};
pub use network::{
    build_admittance, reduce_network, Admittance, NodeLayout, ReducedNetwork, DEFAULT_COUPLING_PU,
    SINGULAR_CONDITION,
};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("non-positive parameter: {what}")]
    NonPositive { what: String },
    #[error("non-positive parameter: {what} (line {line}, column {column})")]
    NonPositiveAt {
        what: String,
        line: usize,
        column: usize,
    },
    #[error("duplicate bus id {0}")]
    DuplicateBus(BusId),
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("network is disconnected: bus {0} is unreachable from bus 1")]
    Disconnected(BusId),
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("load-bus block is singular (condition estimate {condition:.3e})")]
    SingularLoadBlock { condition: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
