use serde::Serialize;

use super::{DynamicsError, SimulationTrace};
use crate::grid::GridModel;
use crate::optimize::Distribution;

/// Deviations below this (rad/s) in both directions count as no transient.
pub const QUIET_TOLERANCE: f64 = 1e-9;
/// Opposite-direction excursions above this (rad/s) flag a mixed-sign transient.
pub const MIXED_SIGN_TOLERANCE: f64 = 1e-6;
/// Largest frequency slope (rad/s^2) over the final 5 % of the horizon for
/// the run to count as settled.
pub const SETTLED_SLOPE: f64 = 1e-4;
const TAIL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyMetrics {
    /// Extreme generator frequency, rad/s.
    pub nadir_omega: f64,
    /// |w0 - nadir_omega|, rad/s.
    pub nadir_cost: f64,
    /// Extreme of the centre-of-inertia frequency in the same direction as
    /// the nadir, rad/s.
    pub coi_min_omega: f64,
    /// Mean generator frequency at the last sample, rad/s.
    pub steady_state_omega: f64,
    pub time_of_nadir: f64,
    /// Generators swung to both sides of w0.
    pub mixed_sign: bool,
    /// Frequencies were flat over the tail of the horizon.
    pub settled: bool,
}

/// Streaming reduction of generator frequency samples.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    omega0: f64,
    weights: Vec<f64>,
    tail_start: f64,
    min: (f64, f64),
    max: (f64, f64),
    coi_min: f64,
    coi_max: f64,
    last: Vec<f64>,
    last_time: f64,
    tail_slope: f64,
    samples: usize,
}

impl MetricsAccumulator {
    pub fn new(omega0: f64, inertias: &[f64], horizon: f64) -> Self {
        let total: f64 = inertias.iter().sum();
        Self {
            omega0,
            weights: inertias.iter().map(|j| j / total).collect(),
            tail_start: horizon * (1.0 - TAIL_FRACTION),
            min: (f64::INFINITY, 0.0),
            max: (f64::NEG_INFINITY, 0.0),
            coi_min: f64::INFINITY,
            coi_max: f64::NEG_INFINITY,
            last: Vec::new(),
            last_time: 0.0,
            tail_slope: 0.0,
            samples: 0,
        }
    }

    pub fn push(&mut self, time: f64, omega_g: &[f64]) {
        for &w in omega_g {
            if w < self.min.0 {
                self.min = (w, time);
            }
            if w > self.max.0 {
                self.max = (w, time);
            }
        }
        let coi: f64 = omega_g.iter().zip(&self.weights).map(|(w, c)| w * c).sum();
        self.coi_min = self.coi_min.min(coi);
        self.coi_max = self.coi_max.max(coi);
        if self.samples > 0 && time >= self.tail_start {
            let dt = time - self.last_time;
            for (w, prev) in omega_g.iter().zip(&self.last) {
                self.tail_slope = self.tail_slope.max((w - prev).abs() / dt);
            }
        }
        self.last.clear();
        self.last.extend_from_slice(omega_g);
        self.last_time = time;
        self.samples += 1;
    }

    pub fn finish(&self) -> Result<FrequencyMetrics, DynamicsError> {
        if self.samples == 0 {
            return Err(DynamicsError::EmptyTrace);
        }
        let w0 = self.omega0;
        let under = (w0 - self.min.0).max(0.0);
        let over = (self.max.0 - w0).max(0.0);
        let steady = self.last.iter().sum::<f64>() / self.last.len() as f64;
        let settled = self.tail_slope < SETTLED_SLOPE;
        if under < QUIET_TOLERANCE && over < QUIET_TOLERANCE {
            return Ok(FrequencyMetrics {
                nadir_omega: w0,
                nadir_cost: 0.0,
                coi_min_omega: w0,
                steady_state_omega: steady,
                time_of_nadir: 0.0,
                mixed_sign: false,
                settled,
            });
        }
        let mixed_sign = under.min(over) > MIXED_SIGN_TOLERANCE;
        let (nadir, time, coi) = if under >= over {
            (self.min.0, self.min.1, self.coi_min)
        } else {
            (self.max.0, self.max.1, self.coi_max)
        };
        Ok(FrequencyMetrics {
            nadir_omega: nadir,
            nadir_cost: (w0 - nadir).abs(),
            coi_min_omega: coi,
            steady_state_omega: steady,
            time_of_nadir: time,
            mixed_sign,
            settled,
        })
    }
}

/// Nadir, centre-of-inertia extreme and final frequency of a trace.
pub fn frequency_nadir(trace: &SimulationTrace) -> Result<FrequencyMetrics, DynamicsError> {
    let mut acc = MetricsAccumulator::new(trace.omega0, &trace.inertias, trace.horizon);
    let mut buf = vec![0.0; trace.omega_g.len()];
    for (k, &t) in trace.times.iter().enumerate() {
        for (slot, series) in buf.iter_mut().zip(&trace.omega_g) {
            *slot = series[k];
        }
        acc.push(t, &buf);
    }
    acc.finish()
}

/// Post-event frequency deviation (rad/s, negative for a loss) from the
/// aggregated swing equation: `-3 P_trans / (sum 1/D_G + sum 1/D_S)`.
pub fn predict_steady_state(
    grid: &GridModel,
    placement: &Distribution,
    unit_inverse_damping: f64,
    p_trans: f64,
) -> Result<f64, DynamicsError> {
    let total = grid.generator_inverse_damping()
        + f64::from(placement.total_units()) * unit_inverse_damping;
    if !(total > 0.0) {
        return Err(DynamicsError::Numerical(
            "total inverse damping is zero".into(),
        ));
    }
    Ok(-3.0 * p_trans / total)
}
