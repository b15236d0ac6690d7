//! C interface to the storage placement library.
//!
//! Every function returns a [`GspStatus`]. On failure the message is kept
//! per thread and can be read with [`gsp_last_error_message`]. Handles are
//! opaque; free them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gsp_core::cli::Session;
use gsp_core::config::RunConfig;
use gsp_core::dynamics::{build_scenarios, Aggregate, LoadStep, SimSettings, StorageParams};
use gsp_core::grid::{parse_grid, BusId, GridModel, DEFAULT_COUPLING_PU};
use gsp_core::optimize::{
    brute_force_search, ce_search, complexity_ratio, count_distributions, CeConfig, Distribution,
    EvaluationRecord, Evaluator, Workers, DEFAULT_BRUTE_BUDGET,
};
use gsp_core::sizing::{split_capacity, total_storage_bound, SizingSpec};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    BudgetExceeded = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Parsed grid.
pub struct GspGrid {
    grid: GridModel,
}

/// Grid, scenarios, sizing and search settings ready for evaluation.
pub struct GspEvaluator {
    evaluator: Evaluator,
    workers: Workers,
    ce: CeConfig,
    brute_budget: u64,
}

/// Load step: `mw` of extra demand at `bus` from `onset_s` on.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GspEvent {
    pub bus: u32,
    pub mw: f64,
    pub onset_s: f64,
}

/// Cross-entropy search settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GspCeConfig {
    pub iterations: u32,
    pub samples: u32,
    pub elite_fraction: f64,
    pub smoothing: f64,
    pub seed: u64,
}

/// Worst-case outcome of one placement. Frequencies in Hz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GspEvaluation {
    pub cost_hz: f64,
    pub nadir_hz: f64,
    pub coi_min_hz: f64,
    pub steady_state_hz: f64,
    pub mixed_sign: bool,
    pub settled: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GspStatus, String);

impl From<gsp_core::Error> for Failure {
    fn from(e: gsp_core::Error) -> Self {
        use gsp_core::optimize::OptimizeError as O;
        let status = match (&e, e.exit_code()) {
            (
                gsp_core::Error::Optimize(
                    O::InvalidDistribution(_) | O::InvalidArgument(_) | O::InvalidConfig(_),
                ),
                _,
            ) => GspStatus::InvalidArgument,
            (_, 3) => GspStatus::Numerical,
            (_, 4) => GspStatus::BudgetExceeded,
            _ => GspStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                gsp_core::Error::from(e).into()
            }
        }
    )*};
}
from_core!(
    gsp_core::config::ConfigError,
    gsp_core::grid::GridError,
    gsp_core::dynamics::DynamicsError,
    gsp_core::sizing::SizingError,
    gsp_core::optimize::OptimizeError
);

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GspStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(GspStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GspStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            GspStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn to_evaluation(r: &EvaluationRecord) -> GspEvaluation {
    GspEvaluation {
        cost_hz: r.cost_hz(),
        nadir_hz: r.nadir_hz,
        coi_min_hz: r.coi_min_hz,
        steady_state_hz: r.steady_state_hz,
        mixed_sign: r.mixed_sign,
        settled: r.settled,
    }
}

fn write_result(
    r: &EvaluationRecord,
    counts: &mut [u32],
    out: &mut GspEvaluation,
) -> Result<(), Failure> {
    let c = r.distribution.counts();
    if counts.len() != c.len() {
        return Err(invalid(format!(
            "counts buffer holds {} buses, grid has {}",
            counts.len(),
            c.len()
        )));
    }
    counts.copy_from_slice(c);
    *out = to_evaluation(r);
    Ok(())
}

/// Last error message on this thread, or null. Valid until the next call
/// on the same thread.
#[no_mangle]
pub extern "C" fn gsp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses grid-file text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_grid_parse(text: *const c_char, out: *mut *mut GspGrid) -> GspStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let grid = parse_grid(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(GspGrid { grid }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`gsp_grid_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gsp_grid_free(grid: *mut GspGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_grid_bus_count(grid: *const GspGrid, out: *mut usize) -> GspStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        *out_arg(out, "out")? = g.grid.n_buses();
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_grid_generator_count(
    grid: *const GspGrid,
    out: *mut usize,
) -> GspStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        *out_arg(out, "out")? = g.grid.n_generators();
        Ok(())
    })
}

/// Total storage inverse damping, W s, that holds the steady-state
/// deviation after a loss of `p_trans_w` within `delta_omega_max` rad/s.
///
/// # Safety
/// `dampings` must point to `n_generators` values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_total_storage_bound(
    p_trans_w: f64,
    delta_omega_max: f64,
    dampings: *const f64,
    n_generators: usize,
    out: *mut f64,
) -> GspStatus {
    guard(|| {
        let spec = SizingSpec {
            p_trans: p_trans_w,
            delta_omega_ss_max: delta_omega_max,
            generator_dampings: slice_arg(dampings, n_generators, "dampings")?.to_vec(),
        };
        *out_arg(out, "out")? = total_storage_bound(&spec)?;
        Ok(())
    })
}

/// Per-unit share of `total` over `n_storage` units.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_split_capacity(
    total: f64,
    n_storage: u32,
    out: *mut f64,
) -> GspStatus {
    guard(|| {
        *out_arg(out, "out")? = split_capacity(total, n_storage)?.per_unit_inverse_damping;
        Ok(())
    })
}

/// Number of placements of `units` identical units over `buses` buses.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_distribution_count(
    buses: usize,
    units: u32,
    out: *mut u64,
) -> GspStatus {
    guard(|| {
        *out_arg(out, "out")? = count_distributions(buses, units)?;
        Ok(())
    })
}

/// Placements divided by CE evaluations.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_complexity_ratio(
    buses: usize,
    units: u32,
    iterations: u32,
    samples: u32,
    out: *mut f64,
) -> GspStatus {
    guard(|| {
        *out_arg(out, "out")? = complexity_ratio(buses, units, iterations, samples)?;
        Ok(())
    })
}

/// Default CE settings.
#[no_mangle]
pub extern "C" fn gsp_ce_config_default() -> GspCeConfig {
    let c = CeConfig::default();
    GspCeConfig {
        iterations: c.n_iter,
        samples: c.samples,
        elite_fraction: c.elite_fraction,
        smoothing: c.smoothing,
        seed: c.seed,
    }
}

/// Builds an evaluator from a run configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_evaluator_from_config(
    path: *const c_char,
    out: *mut *mut GspEvaluator,
) -> GspStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = RunConfig::load(Path::new(str_arg(path, "path")?))?;
        let session = Session::from_config(config)?;
        let handle = GspEvaluator {
            evaluator: session.evaluator()?,
            workers: session.workers()?,
            ce: session.config.ce,
            brute_budget: session.config.brute_budget,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Builds an evaluator for `n_storage` units sized against the largest
/// event and a steady-state limit of `delta_f_ss_max_hz`. Each event is
/// its own scenario; the cost is the worst of them.
///
/// # Safety
/// `grid` must be a live handle, `events` point to `n_events` entries and
/// `out` be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gsp_evaluator_new(
    grid: *const GspGrid,
    events: *const GspEvent,
    n_events: usize,
    n_storage: u32,
    delta_f_ss_max_hz: f64,
    dt: f64,
    horizon: f64,
    out: *mut *mut GspEvaluator,
) -> GspStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let grid = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        let steps: Vec<LoadStep> = slice_arg(events, n_events, "events")?
            .iter()
            .map(|e| LoadStep {
                bus: BusId(e.bus),
                delta_p: e.mw * 1e6,
                onset: e.onset_s,
            })
            .collect();
        let p_trans = steps.iter().map(|s| s.delta_p).fold(0.0, f64::max);
        let spec = SizingSpec {
            p_trans,
            delta_omega_ss_max: 2.0 * std::f64::consts::PI * delta_f_ss_max_hz,
            generator_dampings: grid
                .generators()
                .map(|(_, g)| g.damping(grid.omega0()))
                .collect(),
        };
        let sizing = split_capacity(total_storage_bound(&spec)?, n_storage)?;
        let scenarios = build_scenarios(&steps, Aggregate::Worst, horizon)?;
        let settings = SimSettings {
            dt,
            ..SimSettings::default()
        };
        let evaluator = Evaluator::new(
            grid.clone(),
            scenarios,
            StorageParams::default(),
            sizing,
            DEFAULT_COUPLING_PU,
            settings,
        )?;
        let handle = GspEvaluator {
            evaluator,
            workers: Workers::new(1)?,
            ce: CeConfig::default(),
            brute_budget: DEFAULT_BRUTE_BUDGET,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `ev` must come from an evaluator constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn gsp_evaluator_free(ev: *mut GspEvaluator) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Bus count of the evaluator's grid.
///
/// # Safety
/// `ev` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_evaluator_bus_count(
    ev: *const GspEvaluator,
    out: *mut usize,
) -> GspStatus {
    guard(|| {
        let ev = ev.as_ref().ok_or_else(|| null("evaluator"))?;
        *out_arg(out, "out")? = ev.evaluator.grid().n_buses();
        Ok(())
    })
}

/// Scores one placement given as units per bus, in bus order.
///
/// # Safety
/// `ev` must be a live handle, `counts` point to `n_buses` values and
/// `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_evaluate(
    ev: *const GspEvaluator,
    counts: *const u32,
    n_buses: usize,
    out: *mut GspEvaluation,
) -> GspStatus {
    guard(|| {
        let ev = ev.as_ref().ok_or_else(|| null("evaluator"))?;
        let dist = Distribution::from_counts(slice_arg(counts, n_buses, "counts")?.to_vec());
        let rec = ev.evaluator.evaluate(&dist)?;
        *out_arg(out, "out")? = to_evaluation(&rec);
        Ok(())
    })
}

/// Exhaustive search. Writes the best placement into `best_counts`.
///
/// # Safety
/// `ev` must be a live handle, `best_counts` hold `n_buses` values and
/// `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_brute_force(
    ev: *const GspEvaluator,
    best_counts: *mut u32,
    n_buses: usize,
    out: *mut GspEvaluation,
) -> GspStatus {
    guard(|| {
        let ev = ev.as_ref().ok_or_else(|| null("evaluator"))?;
        let counts = slice_out(best_counts, n_buses, "best_counts")?;
        let out = out_arg(out, "out")?;
        let result = brute_force_search(
            &ev.evaluator,
            ev.brute_budget,
            ev.ce.evaluations(),
            &ev.workers,
        )?;
        write_result(&result.best, counts, out)
    })
}

/// Cross-entropy search with `config`, or the evaluator's own settings
/// when `config` is null.
///
/// # Safety
/// `ev` must be a live handle, `config` valid or null, `best_counts` hold
/// `n_buses` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_ce_search(
    ev: *const GspEvaluator,
    config: *const GspCeConfig,
    best_counts: *mut u32,
    n_buses: usize,
    out: *mut GspEvaluation,
) -> GspStatus {
    guard(|| {
        let ev = ev.as_ref().ok_or_else(|| null("evaluator"))?;
        let counts = slice_out(best_counts, n_buses, "best_counts")?;
        let out = out_arg(out, "out")?;
        let cfg = config.as_ref().map_or(ev.ce, |c| CeConfig {
            n_iter: c.iterations,
            samples: c.samples,
            elite_fraction: c.elite_fraction,
            smoothing: c.smoothing,
            seed: c.seed,
        });
        let result = ce_search(&ev.evaluator, &cfg, &ev.workers)?;
        write_result(&result.best, counts, out)
    })
}
