use super::{
    count_distributions, enumerate_distributions, EvaluationRecord, Evaluator, OptimizeError,
    Workers,
};

/// Distributions evaluated per parallel batch.
const BATCH: usize = 4096;

#[derive(Debug, Clone)]
pub struct BruteForceOutcome {
    pub best: EvaluationRecord,
    /// Every distribution, best first; ties in canonical order.
    pub ranking: Vec<EvaluationRecord>,
}

/// Evaluates every placement of the evaluator's units. Fails up front when
/// the space is larger than `budget`; `ce_evaluations` (N |X|) only feeds
/// the complexity ratio quoted in that error.
pub fn brute_force_search(
    evaluator: &Evaluator,
    budget: u64,
    ce_evaluations: u64,
    workers: &Workers,
) -> Result<BruteForceOutcome, OptimizeError> {
    let n = evaluator.grid().n_buses();
    let n_s = evaluator.n_units();
    let count = count_distributions(n, n_s)?;
    if count > budget {
        return Err(OptimizeError::BudgetExceeded {
            count,
            budget,
            ratio: count as f64 / ce_evaluations.max(1) as f64,
        });
    }
    log::info!(
        "brute force over {count} distributions on {} workers",
        workers.threads()
    );
    let mut ranking = Vec::with_capacity(count as usize);
    let mut it = enumerate_distributions(n, n_s)?;
    loop {
        let batch: Vec<_> = it.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        ranking.extend(workers.evaluate_all(evaluator, &batch)?);
    }
    ranking.sort_by(EvaluationRecord::rank_cmp);
    let best = ranking[0].clone();
    Ok(BruteForceOutcome { best, ranking })
}
