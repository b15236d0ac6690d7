mod common;

use std::collections::HashSet;

use common::*;
use gsp_core::dynamics::{assemble_system, simulate, Aggregate, StorageParams, StorageUnit};
use gsp_core::grid::{build_admittance, parse_grid, reduce_network, DEFAULT_COUPLING_PU};
use gsp_core::optimize::{
    brute_force_search, ce_search, count_distributions, enumerate_distributions, CeConfig,
    Distribution, OptimizeError, Workers,
};

const TOY3: &str = "[buses]\n1 generator 1000 6 2 0.05\n2 load\n3 load\n[lines]\n1 2 12\n2 3 4\n[loads]\n2 300\n3 200\n";

fn one_worker() -> Workers {
    Workers::new(1).unwrap()
}

fn toy_ce(seed: u64) -> CeConfig {
    CeConfig {
        n_iter: 15,
        samples: 40,
        elite_fraction: 0.125,
        smoothing: 0.5,
        seed,
    }
}

#[test]
fn brute_force_ranks_every_placement() {
    let ev = grid6_evaluator(2, 1e-3);
    let out = brute_force_search(&ev, 1000, 1, &one_worker()).unwrap();
    assert_eq!(out.ranking.len(), 21);
    let distinct: HashSet<_> = out.ranking.iter().map(|r| r.distribution.clone()).collect();
    assert_eq!(distinct.len(), 21);
    assert_eq!(out.best, out.ranking[0]);
    let min = out
        .ranking
        .iter()
        .map(|r| r.cost)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.best.cost, min);
    assert!(out.ranking.windows(2).all(|w| w[0].rank_cmp(&w[1]).is_lt()));
}

#[test]
fn three_bus_matches_hand_simulations() {
    let grid = parse_grid(TOY3).unwrap();
    let sizing = sized(&grid, 150.0, 0.2, 1);
    let ev = evaluator(
        &grid,
        &[step(3, 150.0, 1.0)],
        Aggregate::Worst,
        sizing,
        1e-3,
        20.0,
    );
    let best = brute_force_search(&ev, 10, 1, &one_worker()).unwrap().best;

    let unit = StorageUnit {
        params: StorageParams::default(),
        inverse_damping: sizing.per_unit_inverse_damping,
    };
    let w0 = grid.omega0();
    let costs: Vec<f64> = (0..3)
        .map(|bus| {
            let dist = Distribution::from_draws(3, [bus]);
            let y = build_admittance(&grid, &dist, DEFAULT_COUPLING_PU).unwrap();
            let red = reduce_network(&y.matrix, 1, 1).unwrap();
            let sys = assemble_system(&grid, &red, &dist, &unit).unwrap();
            let trace = simulate(&sys, &ev.scenarios()[0], ev.settings()).unwrap();
            let lowest = trace
                .omega_g
                .iter()
                .flatten()
                .fold(f64::INFINITY, |m, w| m.min(*w));
            w0 - lowest
        })
        .collect();
    let hand = (0..3)
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
        .unwrap();
    assert_eq!(best.distribution, Distribution::from_draws(3, [hand]));
    assert!((best.cost - costs[hand]).abs() < 1e-12 * costs[hand]);
}

#[test]
fn symmetric_tie_goes_to_the_lower_bus() {
    let grid = parse_grid(
        "[buses]\n1 load\n2 load\n3 generator 1000 6 2 0.05\n[lines]\n3 1 10\n3 2 10\n[loads]\n1 300\n2 300\n",
    )
    .unwrap();
    let events = [step(1, 100.0, 1.0), step(2, 100.0, 1.0)];
    let ev = evaluator(
        &grid,
        &events,
        Aggregate::Single,
        sized(&grid, 200.0, 0.2, 1),
        1e-3,
        20.0,
    );
    let ranking = brute_force_search(&ev, 10, 1, &one_worker())
        .unwrap()
        .ranking;
    let pos = |bus: usize| {
        ranking
            .iter()
            .position(|r| r.distribution == Distribution::from_draws(3, [bus]))
            .unwrap()
    };
    let (at1, at2) = (pos(0), pos(1));
    assert_eq!(ranking[at1].cost, ranking[at2].cost);
    assert_eq!(at2, at1 + 1);
}

#[test]
fn ce_incumbent_never_worsens_and_q_stays_a_distribution() {
    let ev = grid6_evaluator(2, 1e-3);
    let out = ce_search(&ev, &toy_ce(4), &one_worker()).unwrap();
    assert_eq!(out.history.len(), 15);
    for (i, h) in out.history.iter().enumerate() {
        assert_eq!(h.iteration, i as u32 + 1);
        assert!((h.q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(h.q.iter().all(|p| *p >= 0.0));
    }
    let bests: Vec<f64> = out.best_per_iteration().map(|r| r.cost).collect();
    assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(out.best, out.history.last().unwrap().best);
    assert_eq!(out.q_final, out.history.last().unwrap().q);
}

#[test]
fn ce_is_reproducible_for_a_seed() {
    let ev = grid6_evaluator(2, 1e-3);
    let a = ce_search(&ev, &toy_ce(9), &one_worker()).unwrap();
    let b = ce_search(&ev, &toy_ce(9), &Workers::new(3).unwrap()).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.evaluations, b.evaluations);
}

#[test]
fn zero_iterations_leave_no_incumbent() {
    let ev = grid6_evaluator(2, 1e-3);
    let cfg = CeConfig {
        n_iter: 0,
        ..toy_ce(1)
    };
    match ce_search(&ev, &cfg, &one_worker()) {
        Err(OptimizeError::EmptyIncumbent { q_final }) => assert_eq!(q_final, vec![1.0 / 6.0; 6]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn ce_finds_the_brute_force_optimum_on_a_toy_grid() {
    let grid = parse_grid(TOY3).unwrap();
    let ev = evaluator(
        &grid,
        &[step(3, 150.0, 1.0)],
        Aggregate::Worst,
        sized(&grid, 150.0, 0.2, 2),
        1e-3,
        20.0,
    );
    let brute = brute_force_search(&ev, 10, 1, &one_worker()).unwrap().best;
    let ce = ce_search(&ev, &toy_ce(2), &one_worker()).unwrap().best;
    assert_eq!(ce, brute);
}

#[test]
fn budget_is_checked_before_any_simulation() {
    let ev = grid6_evaluator(2, 1e-3);
    match brute_force_search(&ev, 20, 600, &one_worker()) {
        Err(OptimizeError::BudgetExceeded {
            count,
            budget,
            ratio,
        }) => {
            assert_eq!((count, budget), (21, 20));
            assert!((ratio - 0.035).abs() < 1e-12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn twenty_buses_five_units_enumerate_completely() {
    assert_eq!(count_distributions(20, 5).unwrap(), 42504);
    let mut seen = HashSet::new();
    let mut prev: Option<Distribution> = None;
    for d in enumerate_distributions(20, 5).unwrap() {
        assert_eq!(d.total_units(), 5);
        if let Some(p) = &prev {
            assert!(p < &d);
        }
        prev = Some(d.clone());
        assert!(seen.insert(d));
    }
    assert_eq!(seen.len(), 42504);
}
