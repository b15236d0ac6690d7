use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::grid::{BusId, GridModel};

/// Step change of net consumption at a load bus. A renewable loss of X MW
/// is a `+X` MW step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub bus: BusId,
    /// W.
    pub delta_p: f64,
    /// s.
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientScenario {
    pub events: Vec<LoadStep>,
    /// s.
    pub horizon: f64,
}

impl TransientScenario {
    pub fn new(events: Vec<LoadStep>, horizon: f64) -> Result<Self, DynamicsError> {
        let s = Self { events, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(DynamicsError::InvalidScenario(
                "horizon must be positive".into(),
            ));
        }
        for e in &self.events {
            if !(e.onset >= 0.0 && e.onset < self.horizon) {
                return Err(DynamicsError::InvalidScenario(format!(
                    "event at bus {} starts at {} s, outside [0, {})",
                    e.bus, e.onset, self.horizon
                )));
            }
            if !e.delta_p.is_finite() {
                return Err(DynamicsError::InvalidScenario(
                    "event power must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn check_against(&self, grid: &GridModel) -> Result<(), DynamicsError> {
        for e in &self.events {
            if !grid.is_load_bus(e.bus) {
                return Err(DynamicsError::InvalidScenario(format!(
                    "event bus {} is not a load bus",
                    e.bus
                )));
            }
        }
        Ok(())
    }

    /// Total transient power active at time `t`, W.
    pub fn transient_power(&self, t: f64) -> f64 {
        self.events
            .iter()
            .filter(|e| e.onset <= t)
            .map(|e| e.delta_p)
            .sum()
    }

    /// Transient power once every event has started.
    pub fn final_transient_power(&self) -> f64 {
        self.events.iter().map(|e| e.delta_p).sum()
    }

    /// Same events with every step scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| LoadStep {
                    delta_p: e.delta_p * factor,
                    ..*e
                })
                .collect(),
            horizon: self.horizon,
        }
    }
}

/// How several configured events become scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// Every event is its own scenario; a placement's cost is the worst one.
    #[default]
    Worst,
    /// All events form one combined scenario.
    Single,
}

impl std::str::FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "worst" => Ok(Self::Worst),
            "single" => Ok(Self::Single),
            other => Err(format!(
                "aggregate must be 'worst' or 'single', got '{other}'"
            )),
        }
    }
}

pub fn build_scenarios(
    events: &[LoadStep],
    aggregate: Aggregate,
    horizon: f64,
) -> Result<Vec<TransientScenario>, DynamicsError> {
    if events.is_empty() {
        return Err(DynamicsError::InvalidScenario(
            "no transient events configured".into(),
        ));
    }
    match aggregate {
        Aggregate::Single => Ok(vec![TransientScenario::new(events.to_vec(), horizon)?]),
        Aggregate::Worst => events
            .iter()
            .map(|e| TransientScenario::new(vec![*e], horizon))
            .collect(),
    }
}
