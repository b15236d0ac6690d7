#![allow(dead_code)]

use std::path::PathBuf;

use gsp_core::dynamics::{
    build_scenarios, Aggregate, LoadStep, SimSettings, SimulationTrace, StorageParams,
};
use gsp_core::grid::{
    parse_grid, Bases, Bus, BusId, BusKind, GeneratorParams, GridModel, LineSpec, LoadSpec,
};
use gsp_core::optimize::Evaluator;
use gsp_core::sizing::{split_capacity, total_storage_bound, SizingResult, SizingSpec};
use rand::{Rng, RngExt};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn load_grid(name: &str) -> GridModel {
    let text = std::fs::read_to_string(data_path(name)).expect("bundled grid");
    parse_grid(&text).expect("bundled grid parses")
}

pub fn step(bus: u32, mw: f64, onset: f64) -> LoadStep {
    LoadStep {
        bus: BusId(bus),
        delta_p: mw * 1e6,
        onset,
    }
}

/// Storage sized at the steady-state bound for `p_trans_mw` and `df_hz`.
pub fn sized(grid: &GridModel, p_trans_mw: f64, df_hz: f64, n_s: u32) -> SizingResult {
    let spec = SizingSpec {
        p_trans: p_trans_mw * 1e6,
        delta_omega_ss_max: TWO_PI * df_hz,
        generator_dampings: grid
            .generators()
            .map(|(_, g)| g.damping(grid.omega0()))
            .collect(),
    };
    split_capacity(total_storage_bound(&spec).unwrap(), n_s).unwrap()
}

pub fn evaluator(
    grid: &GridModel,
    events: &[LoadStep],
    aggregate: Aggregate,
    sizing: SizingResult,
    dt: f64,
    horizon: f64,
) -> Evaluator {
    let scenarios = build_scenarios(events, aggregate, horizon).unwrap();
    let settings = SimSettings {
        dt,
        ..SimSettings::default()
    };
    Evaluator::new(
        grid.clone(),
        scenarios,
        StorageParams::default(),
        sizing,
        gsp_core::grid::DEFAULT_COUPLING_PU,
        settings,
    )
    .unwrap()
}

/// Bundled six-bus system with its 200 MW event at bus 6 and storage
/// sized for a 0.2 Hz limit.
pub fn grid6_evaluator(n_s: u32, dt: f64) -> Evaluator {
    let grid = load_grid("grid6.grid");
    let sizing = sized(&grid, 200.0, 0.2, n_s);
    evaluator(
        &grid,
        &[step(6, 200.0, 1.0)],
        Aggregate::Worst,
        sizing,
        dt,
        30.0,
    )
}

/// Bundled twelve-bus chain with a 300 MW event at bus 12.
pub fn chain12_evaluator(n_s: u32, dt: f64) -> Evaluator {
    let grid = load_grid("chain12.grid");
    let sizing = sized(&grid, 300.0, 0.3, n_s);
    evaluator(
        &grid,
        &[step(12, 300.0, 1.0)],
        Aggregate::Worst,
        sizing,
        dt,
        30.0,
    )
}

/// Random connected grid on `n` buses: a random spanning tree plus extra
/// lines, generators on a random non-empty subset.
pub fn random_grid<R: Rng>(rng: &mut R, n: usize) -> GridModel {
    let n_g = rng.random_range(1..=n);
    let mut ids: Vec<usize> = (1..=n).collect();
    // Fisher-Yates, to choose which buses are generators.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let buses: Vec<Bus> = (1..=n)
        .map(|id| {
            let kind = if ids[..n_g].contains(&id) {
                BusKind::Generator(GeneratorParams {
                    rated_power_mw: rng.random_range(200.0..1500.0),
                    inertia_h: rng.random_range(2.0..8.0),
                    poles: 2,
                    droop_alpha: rng.random_range(0.02..0.08),
                })
            } else {
                BusKind::Load
            };
            Bus {
                id: BusId(id as u32),
                kind,
            }
        })
        .collect();
    let mut pairs = std::collections::BTreeSet::new();
    for k in 2..=n {
        let parent = rng.random_range(1..k);
        pairs.insert((parent, k));
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let lines = pairs
        .into_iter()
        .map(|(a, b)| LineSpec {
            from: BusId(a as u32),
            to: BusId(b as u32),
            susceptance: rng.random_range(1.0..50.0),
        })
        .collect();
    let loads = buses
        .iter()
        .filter(|b| !b.is_generator())
        .map(|b| LoadSpec {
            bus: b.id,
            p_mw: rng.random_range(-200.0..600.0),
        })
        .collect();
    GridModel::new(Bases::default(), buses, lines, loads).unwrap()
}

/// Gaussian elimination with partial pivoting on a dense row-major system.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Injections of the first `n_gs` nodes of the Laplacian `y` given their
/// angles and the injections of the remaining nodes, from one dense solve
/// of `Y theta = P` with unknowns `[P_gs; theta_L]`.
pub fn direct_injections(
    y: &nalgebra::DMatrix<f64>,
    n_gs: usize,
    delta: &[f64],
    p_l: &[f64],
) -> Vec<f64> {
    let n = y.nrows();
    let n_l = n - n_gs;
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for r in 0..n {
        let known: f64 = (0..n_gs).map(|c| y[(r, c)] * delta[c]).sum();
        for c in 0..n_l {
            a[r][n_gs + c] = y[(r, n_gs + c)];
        }
        if r < n_gs {
            a[r][r] = -1.0;
            rhs[r] = -known;
        } else {
            rhs[r] = p_l[r - n_gs] - known;
        }
    }
    gauss_solve(a, rhs)[..n_gs].to_vec()
}

/// Trapezoidal integral of each storage's absorbed power, using the
/// pre-step value on the left side of every input step.
pub fn trapezoid_energy(trace: &SimulationTrace) -> Vec<f64> {
    let mut totals = Vec::with_capacity(trace.storage_power.len());
    for (k, p) in trace.storage_power.iter().enumerate() {
        let mut acc = 0.0;
        for i in 1..trace.times.len() {
            let h = trace.times[i] - trace.times[i - 1];
            let left_limit = trace
                .jumps
                .iter()
                .find(|j| j.sample == i)
                .map_or(p[i], |j| j.storage_power_before[k]);
            acc += 0.5 * h * (p[i - 1] + left_limit);
        }
        totals.push(acc);
    }
    totals
}

/// Worst relative mismatch between stored energy and integrated power,
/// scaled by the integral of |P|.
pub fn energy_mismatch(trace: &SimulationTrace) -> f64 {
    let integrals = trapezoid_energy(trace);
    let mut worst: f64 = 0.0;
    for (k, integral) in integrals.iter().enumerate() {
        let e = &trace.energy_s[k];
        let delta_e = e[e.len() - 1] - e[0];
        let p = &trace.storage_power[k];
        let scale: f64 = trace
            .times
            .windows(2)
            .zip(p.windows(2))
            .map(|(t, w)| 0.5 * (t[1] - t[0]) * (w[0].abs() + w[1].abs()))
            .sum::<f64>()
            .max(delta_e.abs())
            .max(f64::MIN_POSITIVE);
        worst = worst.max((delta_e - integral).abs() / scale);
    }
    worst
}
