//! Cross-Entropy search over placements.
//!
//! Each iteration draws `|X|` placements from a categorical distribution
//! `q` over buses (`n_S` draws each), scores them, keeps the best
//! `ceil(eps |X|)` and moves `q` toward the elite's unit frequencies with
//! smoothing `beta`.
//!
//! Randomness comes from ChaCha8 seeded with the run seed; sample `s` of
//! iteration `t` reads stream `t << 32 | s`, so draws do not depend on
//! evaluation order or worker count.

use std::collections::HashMap;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Distribution, EvaluationRecord, Evaluator, OptimizeError, Workers};

/// Guards `ceil` against `eps |X|` landing a rounding error above an integer.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeConfig {
    pub n_iter: u32,
    /// |X|, placements drawn per iteration.
    pub samples: u32,
    /// eps in (0, 1).
    pub elite_fraction: f64,
    /// beta in (0, 1].
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            n_iter: 20,
            samples: 150,
            elite_fraction: 0.125,
            smoothing: 0.03,
            seed: 0,
        }
    }
}

impl CeConfig {
    /// `n_iter = 0` passes; the search then reports an empty incumbent.
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.samples == 0 {
            return Err(OptimizeError::InvalidConfig(
                "samples per iteration must be positive".into(),
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(OptimizeError::InvalidConfig(
                "elite fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(OptimizeError::InvalidConfig(
                "smoothing must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn evaluations(&self) -> u64 {
        u64::from(self.n_iter) * u64::from(self.samples)
    }
}

/// `ceil(eps n)` clamped to `[1, n]`.
pub fn elite_size(n: usize, eps: f64) -> usize {
    ((eps * n as f64 - CEIL_SLACK).ceil().max(1.0) as usize).min(n.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliteSelection {
    /// Largest elite cost.
    pub gamma: f64,
    /// Elite sample indices, cheapest first; equal costs keep sample order.
    pub indices: Vec<usize>,
}

pub fn elite_threshold(costs: &[f64], eps: f64) -> Result<EliteSelection, OptimizeError> {
    if costs.is_empty() {
        return Err(OptimizeError::InvalidArgument(
            "no costs to select from".into(),
        ));
    }
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    order.truncate(elite_size(costs.len(), eps));
    Ok(EliteSelection {
        gamma: costs[*order.last().expect("elite is non-empty")],
        indices: order,
    })
}

/// RNG for sample `sample` of iteration `iteration`.
pub fn sample_rng(seed: u64, iteration: u32, sample: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(iteration) << 32 | u64::from(sample));
    rng
}

/// `n_s` categorical draws from `q`, aggregated into counts.
pub fn ce_sample<R: Rng + ?Sized>(q: &[f64], n_s: u32, rng: &mut R) -> Distribution {
    let last = q.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let draws = (0..n_s).map(|_| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in q.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                return i;
            }
        }
        last
    });
    Distribution::from_draws(q.len(), draws.collect::<Vec<_>>())
}

/// Smoothed update toward the elite's unit frequencies:
/// `q'_i = beta O_i / (k n_s) + (1 - beta) q_i`, renormalised.
pub fn ce_update(q: &[f64], elite: &[&Distribution], beta: f64, n_s: u32) -> Vec<f64> {
    if n_s == 0 || elite.is_empty() {
        return q.to_vec();
    }
    let scale = beta / (elite.len() as f64 * f64::from(n_s));
    let mut next: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(i, &qi)| {
            let occurrences: u32 = elite.iter().map(|d| d.counts()[i]).sum();
            scale * f64::from(occurrences) + (1.0 - beta) * qi
        })
        .collect();
    let total: f64 = next.iter().sum();
    for p in &mut next {
        *p /= total;
    }
    next
}

/// Search state between iterations.
#[derive(Debug, Clone)]
pub struct CeState {
    pub q: Vec<f64>,
    pub iteration: u32,
    pub elite_size: usize,
    pub best: Option<EvaluationRecord>,
    /// Units per bus across the last elite.
    pub occurrences: Vec<u32>,
}

impl CeState {
    pub fn uniform(n: usize, elite_size: usize) -> Self {
        Self {
            q: vec![1.0 / n as f64; n],
            iteration: 0,
            elite_size,
            best: None,
            occurrences: vec![0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeIteration {
    pub iteration: u32,
    pub gamma: f64,
    /// Incumbent after this iteration.
    pub best: EvaluationRecord,
    /// `q` after this iteration's update.
    pub q: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CeOutcome {
    pub best: EvaluationRecord,
    pub q_final: Vec<f64>,
    pub history: Vec<CeIteration>,
    /// Distinct placements simulated.
    pub evaluations: usize,
}

impl CeOutcome {
    pub fn best_per_iteration(&self) -> impl Iterator<Item = &EvaluationRecord> {
        self.history.iter().map(|h| &h.best)
    }
}

pub fn ce_search(
    evaluator: &Evaluator,
    cfg: &CeConfig,
    workers: &Workers,
) -> Result<CeOutcome, OptimizeError> {
    cfg.validate()?;
    let n = evaluator.grid().n_buses();
    let n_s = evaluator.n_units();
    let mut state = CeState::uniform(n, elite_size(cfg.samples as usize, cfg.elite_fraction));
    let mut cache: HashMap<Distribution, EvaluationRecord> = HashMap::new();
    let mut history = Vec::with_capacity(cfg.n_iter as usize);

    for iteration in 0..cfg.n_iter {
        let samples: Vec<Distribution> = (0..cfg.samples)
            .map(|s| ce_sample(&state.q, n_s, &mut sample_rng(cfg.seed, iteration, s)))
            .collect();
        let mut fresh: Vec<Distribution> = Vec::new();
        for d in &samples {
            if !cache.contains_key(d) && !fresh.contains(d) {
                fresh.push(d.clone());
            }
        }
        for rec in workers.evaluate_all(evaluator, &fresh)? {
            cache.insert(rec.distribution.clone(), rec);
        }
        let records: Vec<&EvaluationRecord> = samples.iter().map(|d| &cache[d]).collect();
        for rec in &records {
            let better = state
                .best
                .as_ref()
                .is_none_or(|b| rec.rank_cmp(b) == std::cmp::Ordering::Less);
            if better {
                state.best = Some((*rec).clone());
            }
        }
        let costs: Vec<f64> = records.iter().map(|r| r.cost).collect();
        let elite = elite_threshold(&costs, cfg.elite_fraction)?;
        let elite_dists: Vec<&Distribution> = elite.indices.iter().map(|&i| &samples[i]).collect();
        state.occurrences = (0..n)
            .map(|i| elite_dists.iter().map(|d| d.counts()[i]).sum())
            .collect();
        state.q = ce_update(&state.q, &elite_dists, cfg.smoothing, n_s);
        state.iteration = iteration + 1;
        let best = state
            .best
            .clone()
            .expect("incumbent set after evaluating samples");
        log::debug!(
            "CE iteration {}: gamma {:.6} rad/s, best {} ({:.6} rad/s)",
            iteration + 1,
            elite.gamma,
            best.distribution,
            best.cost
        );
        history.push(CeIteration {
            iteration: iteration + 1,
            gamma: elite.gamma,
            best,
            q: state.q.clone(),
        });
    }

    match state.best {
        Some(best) => Ok(CeOutcome {
            best,
            q_final: state.q,
            history,
            evaluations: cache.len(),
        }),
        None => Err(OptimizeError::EmptyIncumbent { q_final: state.q }),
    }
}
