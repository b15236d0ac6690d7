use super::{Distribution, OptimizeError};
use crate::dynamics::{
    assemble_system, simulate, simulate_metrics, FrequencyMetrics, SimSettings, SimulationTrace,
    StorageParams, StorageUnit, SystemMatrices, TransientScenario,
};
use crate::grid::{build_admittance, reduce_network, GridModel};
use crate::sizing::SizingResult;

/// Worst-case outcome of one placement over the scenario set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub distribution: Distribution,
    /// |w0 - w_nadir|, rad/s, maximised over scenarios.
    pub cost: f64,
    pub nadir_hz: f64,
    pub coi_min_hz: f64,
    pub steady_state_hz: f64,
    /// Index of the scenario that set the cost.
    pub scenario: usize,
    pub mixed_sign: bool,
    pub settled: bool,
}

impl EvaluationRecord {
    fn from_metrics(distribution: Distribution, scenario: usize, m: &FrequencyMetrics) -> Self {
        let hz = |w: f64| w / (2.0 * std::f64::consts::PI);
        Self {
            distribution,
            cost: m.nadir_cost,
            nadir_hz: hz(m.nadir_omega),
            coi_min_hz: hz(m.coi_min_omega),
            steady_state_hz: hz(m.steady_state_omega),
            scenario,
            mixed_sign: m.mixed_sign,
            settled: m.settled,
        }
    }

    pub fn cost_hz(&self) -> f64 {
        self.cost / (2.0 * std::f64::consts::PI)
    }

    /// Ranking order: cost, then canonical distribution order.
    pub fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.distribution.cmp(&other.distribution))
    }
}

/// Everything needed to score a placement. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct Evaluator {
    grid: GridModel,
    scenarios: Vec<TransientScenario>,
    storage: StorageParams,
    sizing: SizingResult,
    coupling_b: f64,
    settings: SimSettings,
}

impl Evaluator {
    pub fn new(
        grid: GridModel,
        scenarios: Vec<TransientScenario>,
        storage: StorageParams,
        sizing: SizingResult,
        coupling_b: f64,
        settings: SimSettings,
    ) -> Result<Self, OptimizeError> {
        if scenarios.is_empty() {
            return Err(OptimizeError::InvalidArgument(
                "no transient events configured".into(),
            ));
        }
        for s in &scenarios {
            s.validate()
                .and_then(|_| s.check_against(&grid))
                .map_err(|source| OptimizeError::Dynamics {
                    distribution: "any".into(),
                    source,
                })?;
        }
        Ok(Self {
            grid,
            scenarios,
            storage,
            sizing,
            coupling_b,
            settings,
        })
    }

    pub fn grid(&self) -> &GridModel {
        &self.grid
    }

    pub fn scenarios(&self) -> &[TransientScenario] {
        &self.scenarios
    }

    pub fn sizing(&self) -> &SizingResult {
        &self.sizing
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    pub fn n_units(&self) -> u32 {
        self.sizing.n_s
    }

    fn check(&self, dist: &Distribution) -> Result<(), OptimizeError> {
        let n = self.grid.n_buses();
        if let Some((bus, _)) = dist.occupied().find(|(b, _)| b.index() >= n) {
            return Err(OptimizeError::InvalidDistribution(format!(
                "bus {bus} is outside the {n}-bus grid"
            )));
        }
        if dist.n_buses() != n {
            return Err(OptimizeError::InvalidDistribution(format!(
                "distribution covers {} buses, grid has {n}",
                dist.n_buses()
            )));
        }
        let units = dist.total_units();
        if units != 0 && units != self.sizing.n_s {
            return Err(OptimizeError::InvalidDistribution(format!(
                "{dist} places {units} units, sizing is for {}",
                self.sizing.n_s
            )));
        }
        Ok(())
    }

    /// State-space model of the grid with `dist` placed. Units of zero
    /// capacity are left out of the network.
    pub fn system(&self, dist: &Distribution) -> Result<SystemMatrices, OptimizeError> {
        self.check(dist)?;
        let placed = if self.sizing.per_unit_inverse_damping > 0.0 {
            dist.clone()
        } else {
            Distribution::empty(dist.n_buses())
        };
        let tag = |_: ()| dist.label();
        let y = build_admittance(&self.grid, &placed, self.coupling_b).map_err(|source| {
            OptimizeError::Grid {
                distribution: tag(()),
                source,
            }
        })?;
        let reduced =
            reduce_network(&y.matrix, y.layout.n_g(), y.layout.n_s()).map_err(|source| {
                OptimizeError::Grid {
                    distribution: tag(()),
                    source,
                }
            })?;
        let unit = StorageUnit {
            params: self.storage,
            // Placeholder capacity when nothing is placed; unused.
            inverse_damping: if placed.total_units() > 0 {
                self.sizing.per_unit_inverse_damping
            } else {
                1.0
            },
        };
        assemble_system(&self.grid, &reduced, &placed, &unit).map_err(|source| {
            OptimizeError::Dynamics {
                distribution: tag(()),
                source,
            }
        })
    }

    pub fn evaluate(&self, dist: &Distribution) -> Result<EvaluationRecord, OptimizeError> {
        let sys = self.system(dist)?;
        let mut worst: Option<EvaluationRecord> = None;
        for (k, scenario) in self.scenarios.iter().enumerate() {
            let m = simulate_metrics(&sys, scenario, &self.settings).map_err(|source| {
                OptimizeError::Dynamics {
                    distribution: dist.label(),
                    source,
                }
            })?;
            if m.mixed_sign {
                log::debug!("{dist}: scenario {k} swings generators both ways");
            }
            if !m.settled {
                log::debug!("{dist}: scenario {k} has not settled by the horizon");
            }
            if worst.as_ref().is_none_or(|w| m.nadir_cost > w.cost) {
                worst = Some(EvaluationRecord::from_metrics(dist.clone(), k, &m));
            }
        }
        Ok(worst.expect("evaluator holds at least one scenario"))
    }

    /// Full traces of `dist` for every scenario.
    pub fn traces(&self, dist: &Distribution) -> Result<Vec<SimulationTrace>, OptimizeError> {
        let sys = self.system(dist)?;
        self.scenarios
            .iter()
            .map(|s| {
                simulate(&sys, s, &self.settings).map_err(|source| OptimizeError::Dynamics {
                    distribution: dist.label(),
                    source,
                })
            })
            .collect()
    }
}

/// Bounded pool of evaluation workers. Results always come back in input
/// order, so the worker count never changes the output.
#[derive(Debug)]
pub struct Workers {
    pool: rayon::ThreadPool,
}

impl Workers {
    /// `threads = 0` uses one worker per core.
    pub fn new(threads: usize) -> Result<Self, OptimizeError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| OptimizeError::InvalidArgument(format!("worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `dists` in parallel. The first failure in input order is
    /// returned.
    pub fn evaluate_all(
        &self,
        evaluator: &Evaluator,
        dists: &[Distribution],
    ) -> Result<Vec<EvaluationRecord>, OptimizeError> {
        use rayon::prelude::*;
        let results: Vec<_> = self
            .pool
            .install(|| dists.par_iter().map(|d| evaluator.evaluate(d)).collect());
        results.into_iter().collect()
    }
}
