//! Total storage droop capacity from a steady-state frequency limit.
//!
//! After a sustained loss `P_trans` the system settles at
//! `dw_ss = -3 P_trans / (sum 1/D_G + sum 1/D_S)`. Keeping `|dw_ss|` under
//! `dw_max` therefore needs `sum 1/D_S >= 3 P_trans / dw_max - sum 1/D_G`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("invalid sizing input: {0}")]
    Invalid(String),
    #[error("infeasible: {total_mws:.3} MWs of storage needed but no units to place")]
    Infeasible { total_mws: f64 },
}

/// Unit convention for the frequency limit plugged into the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationUnits {
    /// Limit converted to rad/s (`2 pi df`); dimensionally consistent.
    #[default]
    RadS,
    /// Limit used as the raw Hz number.
    Hz,
}

impl DeviationUnits {
    /// Value substituted for `dw_max` given a limit in Hz.
    pub fn limit_value(self, delta_f_hz: f64) -> f64 {
        match self {
            DeviationUnits::RadS => 2.0 * PI * delta_f_hz,
            DeviationUnits::Hz => delta_f_hz,
        }
    }
}

impl std::str::FromStr for DeviationUnits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rad_s" => Ok(Self::RadS),
            "hz" => Ok(Self::Hz),
            other => Err(format!(
                "deviation_units must be 'rad_s' or 'hz', got '{other}'"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingSpec {
    /// Sustained post-event loss, W.
    pub p_trans: f64,
    /// Allowed steady-state deviation, rad/s (or Hz under [`DeviationUnits::Hz`]).
    pub delta_omega_ss_max: f64,
    /// D_G of every generator, 1/(W s).
    pub generator_dampings: Vec<f64>,
}

impl SizingSpec {
    fn validate(&self) -> Result<(), SizingError> {
        if !(self.p_trans >= 0.0) || !self.p_trans.is_finite() {
            return Err(SizingError::Invalid(
                "transient power must be non-negative".into(),
            ));
        }
        if !(self.delta_omega_ss_max > 0.0) {
            return Err(SizingError::Invalid(
                "frequency limit must be positive".into(),
            ));
        }
        if self.generator_dampings.iter().any(|d| !(*d > 0.0)) {
            return Err(SizingError::Invalid(
                "generator dampings must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Minimal `sum 1/D_S` in W s, clamped at zero when generators alone suffice.
pub fn total_storage_bound(spec: &SizingSpec) -> Result<f64, SizingError> {
    spec.validate()?;
    let generators: f64 = spec.generator_dampings.iter().map(|d| 1.0 / d).sum();
    Ok((3.0 * spec.p_trans / spec.delta_omega_ss_max - generators).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingResult {
    /// `sum 1/D_S`, W s.
    pub total_inverse_damping: f64,
    /// `1/D_S` of each unit, W s.
    pub per_unit_inverse_damping: f64,
    pub n_s: u32,
}

impl SizingResult {
    pub fn total_mws(&self) -> f64 {
        self.total_inverse_damping / 1e6
    }

    pub fn per_unit_mws(&self) -> f64 {
        self.per_unit_inverse_damping / 1e6
    }
}

/// Equal split of `total` (W s) over `n_s` units.
pub fn split_capacity(total: f64, n_s: u32) -> Result<SizingResult, SizingError> {
    if !(total >= 0.0) || !total.is_finite() {
        return Err(SizingError::Invalid(
            "total capacity must be non-negative".into(),
        ));
    }
    if n_s == 0 {
        if total > 0.0 {
            return Err(SizingError::Infeasible {
                total_mws: total / 1e6,
            });
        }
        return Ok(SizingResult {
            total_inverse_damping: 0.0,
            per_unit_inverse_damping: 0.0,
            n_s,
        });
    }
    Ok(SizingResult {
        total_inverse_damping: total,
        per_unit_inverse_damping: total / f64::from(n_s),
        n_s,
    })
}
