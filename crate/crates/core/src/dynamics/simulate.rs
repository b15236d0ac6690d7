//! Fixed-step classical Runge-Kutta integration of the piecewise-constant
//! input system.
//!
//! For `x' = A x + g` with `g` constant over a step, the four RK4 stages
//! collapse to `x+ = M x + h S g` with `S = I + Ah/2 + (Ah)^2/6 + (Ah)^3/24`
//! and `M = I + Ah S`. Both are built once per run; inputs only change at
//! event onsets, which are snapped to the step grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::metrics::{FrequencyMetrics, MetricsAccumulator};
use super::{DynamicsError, SystemMatrices, TransientScenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Step, s.
    pub dt: f64,
    /// Divergence bound on |omega - w0|, rad/s.
    pub blowup: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            blowup: 2.0 * PI * 10.0,
        }
    }
}

/// Storage power just before a sample where the input steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerJump {
    pub sample: usize,
    pub storage_power_before: Vec<f64>,
}

/// Sampled transient. Series are indexed `[element][sample]`.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    /// Scenario horizon, s.
    pub horizon: f64,
    pub omega0: f64,
    /// COI weights: rotor inertias of the generators.
    pub inertias: Vec<f64>,
    pub omega_g: Vec<Vec<f64>>,
    pub omega_s: Vec<Vec<f64>>,
    /// Energy absorbed since t = 0, J.
    pub energy_s: Vec<Vec<f64>>,
    /// Power drawn from the grid by each storage node (after any step at
    /// that sample), W.
    pub storage_power: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub angle_names: Vec<String>,
    pub generator_names: Vec<String>,
    pub storage_names: Vec<String>,
    pub jumps: Vec<PowerJump>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct Stepper {
    m: DMatrix<f64>,
    /// `h S`.
    hs: DMatrix<f64>,
}

impl Stepper {
    fn new(a: &DMatrix<f64>, h: f64) -> Self {
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let ah = a * h;
        let s = &id + &ah * (&id * 0.5 + &ah * (&id * (1.0 / 6.0) + &ah * (1.0 / 24.0)));
        let m = &id + &ah * &s;
        Self { m, hs: s * h }
    }
}

/// Classical RK4 stage evaluation for one step; reference for the
/// collapsed form used by the simulator.
pub fn rk4_step(sys: &SystemMatrices, x: &DVector<f64>, u: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = sys.derivative(x, u);
    let k2 = sys.derivative(&(x + &k1 * (h / 2.0)), u);
    let k3 = sys.derivative(&(x + &k2 * (h / 2.0)), u);
    let k4 = sys.derivative(&(x + &k3 * h), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

pub(crate) struct Sample<'a> {
    pub index: usize,
    pub time: f64,
    pub state: &'a DVector<f64>,
    pub storage_power: &'a [f64],
    pub jump_from: Option<&'a [f64]>,
}

fn effective(p: f64, charge_eff: f64, discharge_eff: f64) -> f64 {
    if p > 0.0 {
        charge_eff * p
    } else {
        p / discharge_eff
    }
}

/// Runs the scenario and hands every sample (including t = 0) to `observe`.
pub(crate) fn run(
    sys: &SystemMatrices,
    scenario: &TransientScenario,
    settings: &SimSettings,
    mut observe: impl FnMut(Sample<'_>),
) -> Result<(), DynamicsError> {
    scenario.validate()?;
    let dt = settings.dt;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::InvalidScenario(
            "time step must be positive".into(),
        ));
    }
    let lay = &sys.layout;
    for e in &scenario.events {
        if lay.loads.binary_search(&e.bus).is_err() {
            return Err(DynamicsError::InvalidScenario(format!(
                "event bus {} is not a load bus",
                e.bus
            )));
        }
    }
    let steps = (scenario.horizon / dt).round() as usize;
    if steps == 0 {
        return Err(DynamicsError::InvalidScenario(
            "horizon shorter than one step".into(),
        ));
    }
    let onset_step = |t: f64| (t / dt).round() as usize;

    let eq = sys.equilibrium(&sys.base_load)?;
    let p_ref: Vec<f64> = eq.input.rows(0, lay.n_rot()).iter().copied().collect();
    let input_at = |k: usize| {
        let mut load = sys.base_load.clone();
        for e in &scenario.events {
            if onset_step(e.onset) <= k {
                let l = lay.loads.binary_search(&e.bus).expect("checked above");
                load[l] += e.delta_p;
            }
        }
        sys.input(&p_ref, &load)
    };
    let mut change_steps: Vec<usize> = scenario
        .events
        .iter()
        .map(|e| onset_step(e.onset))
        .filter(|&k| k > 0 && k < steps)
        .collect();
    change_steps.sort_unstable();
    change_steps.dedup();

    let stepper = Stepper::new(&sys.a, dt);
    let n_g = lay.n_g();
    let n_s = lay.n_s();
    let na = lay.n_angles();
    let lossless = sys.storage.params.is_lossless();
    let (eta_c, eta_d) = (
        sys.storage.params.charge_eff,
        sys.storage.params.discharge_eff,
    );

    let storage_power = |x: &DVector<f64>, u: &DVector<f64>, out: &mut Vec<f64>| {
        let inj = sys.injections(x, u);
        out.clear();
        out.extend((0..n_s).map(|k| -inj[n_g + k]));
    };

    let mut x = eq.state.clone();
    let mut u = input_at(0);
    let mut drive = &stepper.hs * (&sys.b * &u + &sys.affine);
    let mut p_now = Vec::with_capacity(n_s);
    let mut p_before = Vec::with_capacity(n_s);

    storage_power(&x, &u, &mut p_now);
    let jump0 = if u != eq.input {
        storage_power(&x, &eq.input, &mut p_before);
        Some(p_before.as_slice())
    } else {
        None
    };
    observe(Sample {
        index: 0,
        time: 0.0,
        state: &x,
        storage_power: &p_now,
        jump_from: jump0,
    });

    let mut next_change = change_steps.iter().copied().peekable();
    let mut x_next = DVector::<f64>::zeros(x.len());
    let mut p_prev = p_now.clone();
    for k in 1..=steps {
        x_next.gemv(1.0, &stepper.m, &x, 0.0);
        x_next += &drive;
        std::mem::swap(&mut x, &mut x_next);

        if !lossless {
            // Energy follows the effective power, trapezoid over the step.
            storage_power(&x, &u, &mut p_now);
            for s in 0..n_s {
                let idx = lay.energy(s);
                x[idx] = x_next[idx]
                    + 0.5
                        * dt
                        * (effective(p_prev[s], eta_c, eta_d) + effective(p_now[s], eta_c, eta_d));
            }
        }

        for i in 0..lay.n_rot() {
            let dev = x[na + i] - sys.omega0;
            if !(dev.abs() <= settings.blowup) {
                return Err(DynamicsError::Unstable {
                    state: lay.state_name(na + i),
                    time: k as f64 * dt,
                });
            }
        }

        let mut jump = false;
        if next_change.peek() == Some(&k) {
            next_change.next();
            storage_power(&x, &u, &mut p_before);
            u = input_at(k);
            drive = &stepper.hs * (&sys.b * &u + &sys.affine);
            jump = true;
        }
        storage_power(&x, &u, &mut p_now);
        observe(Sample {
            index: k,
            time: k as f64 * dt,
            state: &x,
            storage_power: &p_now,
            jump_from: jump.then_some(p_before.as_slice()),
        });
        std::mem::swap(&mut p_prev, &mut p_now);
    }
    Ok(())
}

/// Simulates `scenario` from the pre-event equilibrium and records the
/// full trace.
pub fn simulate(
    sys: &SystemMatrices,
    scenario: &TransientScenario,
    settings: &SimSettings,
) -> Result<SimulationTrace, DynamicsError> {
    let lay = &sys.layout;
    let (n_g, n_s, na) = (lay.n_g(), lay.n_s(), lay.n_angles());
    let cap = (scenario.horizon / settings.dt.max(f64::MIN_POSITIVE)).round() as usize + 1;
    let series = |n: usize| vec![Vec::with_capacity(cap.min(1 << 24)); n];
    let mut trace = SimulationTrace {
        times: Vec::with_capacity(cap.min(1 << 24)),
        horizon: scenario.horizon,
        omega0: sys.omega0,
        inertias: sys.inertias.clone(),
        omega_g: series(n_g),
        omega_s: series(n_s),
        energy_s: series(n_s),
        storage_power: series(n_s),
        angles: series(na),
        angle_names: (0..na).map(|i| lay.state_name(i)).collect(),
        generator_names: lay.generators.iter().map(|b| b.to_string()).collect(),
        storage_names: lay.storage_hosts.iter().map(|b| b.to_string()).collect(),
        jumps: Vec::new(),
    };
    run(sys, scenario, settings, |s| {
        trace.times.push(s.time);
        for i in 0..n_g {
            trace.omega_g[i].push(s.state[lay.omega_g(i)]);
        }
        for k in 0..n_s {
            trace.omega_s[k].push(s.state[lay.omega_s(k)]);
            trace.energy_s[k].push(s.state[lay.energy(k)]);
            trace.storage_power[k].push(s.storage_power[k]);
        }
        for i in 0..na {
            trace.angles[i].push(s.state[i]);
        }
        if let Some(before) = s.jump_from {
            trace.jumps.push(PowerJump {
                sample: s.index,
                storage_power_before: before.to_vec(),
            });
        }
    })?;
    Ok(trace)
}

/// Simulates `scenario` and reduces it to frequency metrics on the fly,
/// without storing the trace.
pub fn simulate_metrics(
    sys: &SystemMatrices,
    scenario: &TransientScenario,
    settings: &SimSettings,
) -> Result<FrequencyMetrics, DynamicsError> {
    let lay = &sys.layout;
    let n_g = lay.n_g();
    let na = lay.n_angles();
    let mut acc = MetricsAccumulator::new(sys.omega0, &sys.inertias, scenario.horizon);
    run(sys, scenario, settings, |s| {
        acc.push(s.time, &s.state.as_slice()[na..na + n_g]);
    })?;
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_system, LoadStep, StorageParams, StorageUnit};
    use crate::grid::{build_admittance, parse_grid, reduce_network, BusId};
    use crate::optimize::Distribution;

    fn system(counts: Vec<u32>) -> SystemMatrices {
        let grid = parse_grid(
            "[buses]\n1 generator 1000 6 2 0.05\n2 generator 600 4 2 0.05\n3 load\n4 load\n\
             [lines]\n1 3 6\n2 4 5\n3 4 4\n1 2 2\n[loads]\n3 800\n4 500\n",
        )
        .unwrap();
        let d = Distribution::from_counts(counts);
        let y = build_admittance(&grid, &d, 1000.0).unwrap();
        let r = reduce_network(&y.matrix, 2, y.layout.n_s()).unwrap();
        let unit = StorageUnit {
            params: StorageParams::default(),
            inverse_damping: 80e6,
        };
        assemble_system(&grid, &r, &d, &unit).unwrap()
    }

    fn step(delta_mw: f64) -> TransientScenario {
        TransientScenario::new(
            vec![LoadStep {
                bus: BusId(4),
                delta_p: delta_mw * 1e6,
                onset: 0.5,
            }],
            5.0,
        )
        .unwrap()
    }

    #[test]
    fn collapsed_step_matches_stage_form() {
        let sys = system(vec![0, 1, 0, 1]);
        let eq = sys.equilibrium(&sys.base_load).unwrap();
        let mut x = eq.state.clone();
        x[0] += 0.01;
        x[sys.layout.omega_s(0)] -= 0.2;
        let u = eq.input.clone();
        let h = 1e-3;
        let st = Stepper::new(&sys.a, h);
        let fast = &st.m * &x + &st.hs * (&sys.b * &u + &sys.affine);
        let slow = rk4_step(&sys, &x, &u, h);
        let err = (fast - &slow).amax();
        assert!(err < 1e-10 * slow.amax(), "err {err}");
    }

    #[test]
    fn zero_event_stays_at_equilibrium() {
        let sys = system(vec![0, 0, 1, 0]);
        let trace = simulate(&sys, &step(0.0), &SimSettings::default()).unwrap();
        for series in trace.omega_g.iter().chain(&trace.omega_s) {
            for w in series {
                assert!((w - sys.omega0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn first_sample_is_equilibrium_and_jump_recorded() {
        let sys = system(vec![0, 0, 0, 1]);
        let trace = simulate(&sys, &step(100.0), &SimSettings::default()).unwrap();
        assert_eq!(trace.times[0], 0.0);
        assert_eq!(trace.jumps.len(), 1);
        assert_eq!(trace.jumps[0].sample, 500);
        assert!(trace.storage_power[0][0].abs() < 1e-3);
    }

    #[test]
    fn blowup_names_state() {
        let sys = system(vec![0, 0, 0, 0]);
        let settings = SimSettings {
            blowup: 1e-3,
            ..SimSettings::default()
        };
        match simulate_metrics(&sys, &step(100.0), &settings) {
            Err(DynamicsError::Unstable { state, .. }) => assert!(state.starts_with("omega_")),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn metrics_path_matches_trace_path() {
        let sys = system(vec![0, 1, 1, 0]);
        let sc = step(150.0);
        let settings = SimSettings {
            dt: 2e-3,
            ..SimSettings::default()
        };
        let trace = simulate(&sys, &sc, &settings).unwrap();
        let a = crate::dynamics::frequency_nadir(&trace).unwrap();
        let b = simulate_metrics(&sys, &sc, &settings).unwrap();
        assert_eq!(a, b);
    }
}
