//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use gsp_core::dynamics::{frequency_nadir, SimulationTrace};
use gsp_core::grid::{build_admittance, reduce_network, BusId, DEFAULT_COUPLING_PU};
use gsp_core::optimize::{
    brute_force_search, ce_search, complexity_ratio, enumerate_distributions, CeConfig,
    Distribution, Evaluator, Workers,
};
use gsp_core::report::convergence_csv;
use gsp_core::sizing::split_capacity;
use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and runtime limits.
/// Half a unit in the last published decimal.
const RATIO_HALF_ULP: f64 = 0.5;
const STEADY_STATE_TOL_HZ: f64 = 1e-3;
const REDUCTION_REL_TOL: f64 = 1e-10;
const CE_MIN_HITS: usize = 9;
const NADIR_OVER_COI: f64 = 5.0;
const HALVING_TOL_HZ: f64 = 1e-5;
const Q_SUM_TOL: f64 = 1e-12;
const ENERGY_REL_TOL: f64 = 1e-6;

const LIMIT_COMBINATORICS: Duration = Duration::from_secs(1);
const LIMIT_STEADY_STATE: Duration = Duration::from_secs(10);
const LIMIT_REDUCTION: Duration = Duration::from_secs(5);
const LIMIT_CE_AGREEMENT: Duration = Duration::from_secs(120);
const LIMIT_LOCALITY: Duration = Duration::from_secs(600);

const DEFAULT_DT: f64 = 1e-3;
const GRID6_DT: f64 = DEFAULT_DT;
const CHAIN_DT: f64 = 2e-3;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, started: Instant, detail: String) -> Outcome {
    let took = started.elapsed();
    check(
        took < limit,
        format!(
            "{detail}; {:.2} s (limit {} s)",
            took.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn hz(w: f64) -> f64 {
    w / TWO_PI
}

/// Shared state from runs whose traces later criteria inspect.
#[derive(Default)]
struct Observed {
    /// Worst energy mismatch over every trace simulated.
    energy_mismatch: f64,
    traces: usize,
    /// Worst |q sum - 1|, count of incumbent regressions, byte mismatches
    /// between repeated CE runs.
    q_sum_err: f64,
    regressions: usize,
    csv_mismatches: usize,
    ce_runs: usize,
}

impl Observed {
    fn traces(&mut self, ev: &Evaluator, dist: &Distribution) -> Vec<SimulationTrace> {
        let traces = ev.traces(dist).expect("simulation");
        for t in &traces {
            self.energy_mismatch = self.energy_mismatch.max(energy_mismatch(t));
            self.traces += 1;
        }
        traces
    }
}

fn combinatorics() -> Outcome {
    let started = Instant::now();
    let count = enumerate_distributions(20, 5)
        .map_err(|e| e.to_string())?
        .count();
    // (n_S, N, |X|), published ratio, decimals it was published with.
    let cases = [
        ((5, 20, 150), 14.17, 2),
        ((8, 30, 250), 296.0, 0),
        ((10, 30, 250), 2670.67, 2),
        ((10, 35, 300), 1907.6, 1),
    ];
    let mut detail = format!("enumerate(20, 5) = {count}");
    let mut ok = count == 42504;
    for ((units, iters, samples), want, decimals) in cases {
        let got = complexity_ratio(20, units, iters, samples).map_err(|e| e.to_string())?;
        ok &= (got - want).abs() <= RATIO_HALF_ULP * 10f64.powi(-decimals);
        detail += &format!(", ratio(n_S={units}, N={iters}, |X|={samples}) = {got:.2}");
    }
    let timed = within(LIMIT_COMBINATORICS, started, detail);
    if ok {
        timed
    } else {
        Err(timed.unwrap_or_else(|e| e))
    }
}

fn steady_state(obs: &mut Observed) -> Outcome {
    let started = Instant::now();
    let ev = grid6_evaluator(2, GRID6_DT);
    let grid = ev.grid().clone();
    let mut worst_err: f64 = 0.0;
    let mut placements = 0;
    for dist in enumerate_distributions(6, 2).unwrap() {
        for t in obs.traces(&ev, &dist) {
            let m = frequency_nadir(&t).unwrap();
            worst_err = worst_err.max((hz(grid.omega0() - m.steady_state_omega) - 0.2).abs());
        }
        placements += 1;
    }
    let half = split_capacity(ev.sizing().total_inverse_damping / 2.0, 2).unwrap();
    let weak = evaluator(
        &grid,
        &[step(6, 200.0, 1.0)],
        gsp_core::dynamics::Aggregate::Worst,
        half,
        GRID6_DT,
        30.0,
    );
    let mut least_half: f64 = f64::INFINITY;
    for dist in enumerate_distributions(6, 2).unwrap() {
        for t in obs.traces(&weak, &dist) {
            let m = frequency_nadir(&t).unwrap();
            least_half = least_half.min(hz(grid.omega0() - m.steady_state_omega));
        }
    }
    let ok = worst_err < STEADY_STATE_TOL_HZ && least_half > 0.2;
    let detail = format!(
        "max |df_ss - 0.2 Hz| = {worst_err:.2e} Hz over {placements} placements; half bound gives df_ss >= {least_half:.4} Hz"
    );
    let timed = within(LIMIT_STEADY_STATE, started, detail);
    if ok {
        timed
    } else {
        Err(timed.unwrap_or_else(|e| e))
    }
}

fn reduction() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(3..=8);
        let grid = random_grid(&mut rng, n);
        let units = rng.random_range(0..3);
        let placement = Distribution::from_draws(n, (0..units).map(|_| rng.random_range(0..n)));
        let y = build_admittance(&grid, &placement, DEFAULT_COUPLING_PU).unwrap();
        let (n_g, n_s) = (y.layout.n_g(), y.layout.n_s());
        let red = reduce_network(&y.matrix, n_g, n_s).unwrap();
        let mut delta: Vec<f64> = (0..n_g + n_s)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        delta[0] = 0.0;
        let p_l: Vec<f64> = (0..y.layout.n_l())
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        let reduced = red.g_matrix() * DVector::from_column_slice(&delta[1..])
            + red.h_matrix() * DVector::from_column_slice(&p_l);
        let direct = direct_injections(&y.matrix, n_g + n_s, &delta, &p_l);
        let scale = direct
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(1e-300);
        let err = reduced
            .iter()
            .zip(&direct)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        worst = worst.max(err);
    }
    let ok = worst < REDUCTION_REL_TOL;
    let timed = within(
        LIMIT_REDUCTION,
        started,
        format!("50 grids, worst relative error {worst:.2e}"),
    );
    if ok {
        timed
    } else {
        Err(timed.unwrap_or_else(|e| e))
    }
}

fn ce_agreement(obs: &mut Observed) -> Outcome {
    let started = Instant::now();
    let ev = grid6_evaluator(2, GRID6_DT);
    let workers = Workers::new(1).unwrap();
    let brute = brute_force_search(&ev, 1000, 600, &workers).unwrap().best;
    let mut hits = 0;
    for seed in 1..=10 {
        let cfg = CeConfig {
            n_iter: 15,
            samples: 40,
            elite_fraction: 0.125,
            smoothing: 0.5,
            seed,
        };
        let a = ce_search(&ev, &cfg, &workers).unwrap();
        let b = ce_search(&ev, &cfg, &workers).unwrap();
        hits += usize::from(a.best.distribution == brute.distribution);
        record_ce(
            obs,
            &a.history,
            convergence_csv(&a.history, 6),
            convergence_csv(&b.history, 6),
        );
    }
    let ok = hits >= CE_MIN_HITS;
    let timed = within(
        LIMIT_CE_AGREEMENT,
        started,
        format!(
            "{hits}/10 seeds found the brute-force optimum {} ({:.5} Hz)",
            brute.distribution,
            brute.cost_hz()
        ),
    );
    if ok {
        timed
    } else {
        Err(timed.unwrap_or_else(|e| e))
    }
}

fn record_ce(
    obs: &mut Observed,
    history: &[gsp_core::optimize::CeIteration],
    a: String,
    b: String,
) {
    obs.ce_runs += 1;
    for h in history {
        obs.q_sum_err = obs.q_sum_err.max((h.q.iter().sum::<f64>() - 1.0).abs());
        if h.q.iter().any(|p| *p < 0.0) {
            obs.q_sum_err = f64::INFINITY;
        }
    }
    obs.regressions += history
        .windows(2)
        .filter(|w| w[1].best.cost > w[0].best.cost)
        .count();
    obs.csv_mismatches += usize::from(a != b);
}

/// Effective resistance of every bus to `target` on the storage-free grid.
fn electrical_distance(ev: &Evaluator, target: BusId) -> Vec<f64> {
    let grid = ev.grid();
    let n = grid.n_buses();
    let y = build_admittance(grid, &Distribution::empty(n), DEFAULT_COUPLING_PU).unwrap();
    let node = |b: usize| y.layout.node_of_bus(BusId(b as u32 + 1)).unwrap();
    let t = node(target.index());
    let keep: Vec<usize> = (0..n).filter(|&i| i != t).collect();
    (0..n)
        .map(|bus| {
            let i = node(bus);
            if i == t {
                return 0.0;
            }
            let a: Vec<Vec<f64>> = keep
                .iter()
                .map(|&r| keep.iter().map(|&c| y.matrix[(r, c)]).collect())
                .collect();
            let rhs: Vec<f64> = keep
                .iter()
                .map(|&r| if r == i { 1.0 } else { 0.0 })
                .collect();
            let x = gauss_solve(a, rhs);
            x[keep.iter().position(|&r| r == i).unwrap()]
        })
        .collect()
}

fn locality() -> Outcome {
    let started = Instant::now();
    let ev = chain12_evaluator(3, CHAIN_DT);
    let out = brute_force_search(&ev, 1000, 1, &Workers::new(0).unwrap()).unwrap();
    let dist = electrical_distance(&ev, BusId(12));
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    let near = [order[0], order[1]];
    let far = [order[10], order[11]];
    let best = &out.ranking[0];
    let worst = out.ranking.last().unwrap();
    let inside =
        |d: &Distribution, set: [usize; 2]| d.occupied().all(|(b, _)| set.contains(&b.index()));
    let nadir_gap = (best.nadir_hz - worst.nadir_hz).abs();
    let coi_gap = (best.coi_min_hz - worst.coi_min_hz).abs();
    let ok = inside(&best.distribution, near)
        && inside(&worst.distribution, far)
        && nadir_gap > NADIR_OVER_COI * coi_gap;
    let detail = format!(
        "best {} worst {} (nearest buses {}, {}; farthest {}, {}); nadir gap {nadir_gap:.4} Hz, COI gap {coi_gap:.4} Hz",
        best.distribution,
        worst.distribution,
        near[0] + 1,
        near[1] + 1,
        far[0] + 1,
        far[1] + 1
    );
    let timed = within(LIMIT_LOCALITY, started, detail);
    if ok {
        timed
    } else {
        Err(timed.unwrap_or_else(|e| e))
    }
}

/// Worst nadir change, Hz, between steps `dt` and `dt / 2` over every
/// placement, and the number of pairs compared.
fn halving_gap(
    obs: &mut Observed,
    make: fn(u32, f64) -> Evaluator,
    units: u32,
    dt: f64,
) -> (f64, usize) {
    let (coarse, fine) = (make(units, dt), make(units, dt / 2.0));
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for dist in enumerate_distributions(coarse.grid().n_buses(), units).unwrap() {
        let a = obs.traces(&coarse, &dist);
        let b = obs.traces(&fine, &dist);
        for (ta, tb) in a.iter().zip(&b) {
            let na = frequency_nadir(ta).unwrap().nadir_omega;
            let nb = frequency_nadir(tb).unwrap().nadir_omega;
            worst = worst.max(hz((na - nb).abs()));
            runs += 1;
        }
    }
    (worst, runs)
}

fn halving(obs: &mut Observed) -> Outcome {
    let (g6, n6) = halving_gap(obs, grid6_evaluator, 2, DEFAULT_DT);
    let (ch, nch) = halving_gap(obs, chain12_evaluator, 3, DEFAULT_DT);
    // Informational: the chain's search step is coarser than the default.
    let (coarse, _) = halving_gap(obs, chain12_evaluator, 3, CHAIN_DT);
    check(
        g6.max(ch) < HALVING_TOL_HZ,
        format!(
            "default step {} ms: 6-bus worst {g6:.2e} Hz over {n6} placements, chain worst {ch:.2e} Hz over {nch}; \
             chain from {} ms: {coarse:.2e} Hz",
            DEFAULT_DT * 1e3,
            CHAIN_DT * 1e3
        ),
    )
}

fn ce_invariants(obs: &Observed) -> Outcome {
    let ok = obs.q_sum_err < Q_SUM_TOL
        && obs.regressions == 0
        && obs.csv_mismatches == 0
        && obs.ce_runs > 0;
    check(
        ok,
        format!(
            "{} runs: worst |sum q - 1| = {:.1e}, {} incumbent regressions, {} convergence CSV mismatches",
            obs.ce_runs, obs.q_sum_err, obs.regressions, obs.csv_mismatches
        ),
    )
}

fn energy(obs: &Observed) -> Outcome {
    check(
        obs.energy_mismatch < ENERGY_REL_TOL && obs.traces > 0,
        format!(
            "{} traces, worst relative mismatch {:.2e}",
            obs.traces, obs.energy_mismatch
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(d) => {
            println!("PASS {name}: {d}");
            true
        }
        Err(d) => {
            println!("FAIL {name}: {d}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut obs = Observed::default();
    let results = [
        run("1 combinatorics", combinatorics),
        run("2 steady state at the storage bound", || {
            steady_state(&mut obs)
        }),
        run("3 network reduction oracle", reduction),
        run("4 brute force and CE agreement", || ce_agreement(&mut obs)),
        run("5 locality on the chain grid", locality),
        run("6 integrator step halving", || halving(&mut obs)),
        run("7 CE invariants", || ce_invariants(&obs)),
        run("8 energy bookkeeping", || energy(&obs)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
