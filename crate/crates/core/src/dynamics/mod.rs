//! Frequency dynamics of generators and droop-controlled storage inverters.

mod metrics;
mod scenario;
mod simulate;
mod system;

use thiserror::Error;

pub use metrics::{
    frequency_nadir, predict_steady_state, FrequencyMetrics, MetricsAccumulator,
    MIXED_SIGN_TOLERANCE, QUIET_TOLERANCE, SETTLED_SLOPE,
};
pub use scenario::{build_scenarios, Aggregate, LoadStep, TransientScenario};
pub use simulate::{rk4_step, simulate, simulate_metrics, PowerJump, SimSettings, SimulationTrace};
pub use system::{assemble_system, Equilibrium, StateLayout, SystemMatrices};

/// Default scenario horizon, s.
pub const DEFAULT_HORIZON: f64 = 30.0;

/// Grid-supporting inverter parameters shared by every storage unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageParams {
    /// Low-pass smoothing time constant alpha_S, s.
    pub filter_alpha: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
}

impl Default for StorageParams {
    fn default() -> Self {
        Self {
            filter_alpha: 0.1,
            charge_eff: 1.0,
            discharge_eff: 1.0,
        }
    }
}

impl StorageParams {
    pub fn is_lossless(&self) -> bool {
        self.charge_eff == 1.0 && self.discharge_eff == 1.0
    }
}

/// One storage unit: inverter parameters plus its droop capacity 1/D_S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageUnit {
    pub params: StorageParams,
    /// 1/D_S of a single unit, W s.
    pub inverse_damping: f64,
}

impl StorageUnit {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let p = &self.params;
        if !(p.filter_alpha > 0.0) {
            return Err(DynamicsError::InvalidStorage(
                "filter time constant must be positive".into(),
            ));
        }
        for (what, eff) in [("charge", p.charge_eff), ("discharge", p.discharge_eff)] {
            if !(eff > 0.0 && eff <= 1.0) {
                return Err(DynamicsError::InvalidStorage(format!(
                    "{what} efficiency must lie in (0, 1]"
                )));
            }
        }
        if !(self.inverse_damping > 0.0) || !self.inverse_damping.is_finite() {
            return Err(DynamicsError::InvalidStorage(
                "unit inverse damping must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid storage parameters: {0}")]
    InvalidStorage(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("integration diverged: {state} left the blow-up bound at t = {time:.4} s")]
    Unstable { state: String, time: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("empty trace")]
    EmptyTrace,
}
