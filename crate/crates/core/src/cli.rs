//! Command-line front end: `validate`, `size`, `simulate`, `search`,
//! `enumerate`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, Method, RunConfig};
use crate::dynamics::{build_scenarios, frequency_nadir, predict_steady_state, TransientScenario};
use crate::grid::{build_admittance, parse_grid, reduce_network, GridModel};
use crate::optimize::{
    brute_force_search, ce_search, complexity_ratio, count_distributions, enumerate_distributions,
    Distribution, EvaluationRecord, Evaluator, OptimizeError, Workers,
};
use crate::report::{self, BestSummary, Comparison, SearchReport};
use crate::sizing::{split_capacity, total_storage_bound, SizingResult, SizingSpec};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "gsp",
    version,
    about = "Storage placement for frequency-nadir minimisation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (text or JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the CE seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Concurrent evaluations; 0 = one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse config and grid, reduce the network once, report sizes.
    Validate(Common),
    /// Print the storage sizing as JSON.
    Size(Common),
    /// Simulate one placement; write traces and print metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Placement such as `7:2,10:3`; `none` for no storage.
        #[arg(long)]
        placement: String,
    },
    /// Search for the best placement.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<Method>,
    },
    /// List every placement in canonical order.
    Enumerate {
        /// Take bus and unit counts from this config.
        #[arg(long, conflicts_with_all = ["buses", "units"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "units")]
        buses: Option<usize>,
        #[arg(long, requires = "buses")]
        units: Option<u32>,
        /// Print only the count.
        #[arg(long)]
        count: bool,
    },
}

/// Loaded grid, scenarios and sizing for one config.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: RunConfig,
    pub grid: GridModel,
    /// Loss used for sizing, W.
    pub p_trans: f64,
    /// Required `sum 1/D_S`, W s.
    pub bound_total: f64,
}

impl Session {
    pub fn load(common: &Common) -> Result<Self, Error> {
        let mut config = RunConfig::load(&common.config)?;
        if let Some(seed) = common.seed {
            config.ce.seed = seed;
        }
        if let Some(w) = common.workers {
            config.workers = w;
        }
        if let Some(out) = &common.out {
            config.out_dir = out.clone();
        }
        Self::from_config(config)
    }

    pub fn from_config(config: RunConfig) -> Result<Self, Error> {
        let path = config.grid_path.display().to_string();
        let text =
            std::fs::read_to_string(&config.grid_path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
        let grid = parse_grid(&text).map_err(|source| ConfigError::Grid { path, source })?;
        let p_trans = match config.p_trans_mw {
            Some(mw) => mw * 1e6,
            None => default_p_trans(&config),
        };
        let spec = SizingSpec {
            p_trans,
            delta_omega_ss_max: config.delta_omega_limit(),
            generator_dampings: grid
                .generators()
                .map(|(_, g)| g.damping(grid.omega0()))
                .collect(),
        };
        let bound_total = total_storage_bound(&spec)?;
        Ok(Self {
            config,
            grid,
            p_trans,
            bound_total,
        })
    }

    pub fn scenarios(&self) -> Result<Vec<TransientScenario>, Error> {
        Ok(build_scenarios(
            &self.config.load_steps(),
            self.config.aggregate,
            self.config.horizon,
        )?)
    }

    pub fn sizing(&self) -> Result<SizingResult, Error> {
        Ok(split_capacity(self.bound_total, self.config.n_storage)?)
    }

    pub fn evaluator(&self) -> Result<Evaluator, Error> {
        Ok(Evaluator::new(
            self.grid.clone(),
            self.scenarios()?,
            self.config.storage,
            self.sizing()?,
            self.config.coupling_pu,
            self.config.sim,
        )?)
    }

    pub fn workers(&self) -> Result<Workers, Error> {
        Ok(Workers::new(self.config.workers)?)
    }
}

/// Largest loss any scenario sees once all of its events have started.
fn default_p_trans(config: &RunConfig) -> f64 {
    let steps = config.load_steps();
    let total = match config.aggregate {
        crate::dynamics::Aggregate::Single => steps.iter().map(|s| s.delta_p).sum(),
        crate::dynamics::Aggregate::Worst => steps.iter().map(|s| s.delta_p).fold(0.0, f64::max),
    };
    total.max(0.0)
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
struct SizeReport {
    total_MWs: f64,
    per_unit_MWs: f64,
    n_S: u32,
    feasible: bool,
}

fn size_report(s: &Session) -> SizeReport {
    let n_s = s.config.n_storage;
    let feasible = n_s > 0 || s.bound_total == 0.0;
    SizeReport {
        total_MWs: s.bound_total / 1e6,
        per_unit_MWs: if n_s > 0 {
            s.bound_total / 1e6 / f64::from(n_s)
        } else {
            0.0
        },
        n_S: n_s,
        feasible,
    }
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
struct ValidateReport {
    n: usize,
    n_G: usize,
    n_L: usize,
    n_S: u32,
    solutions: u64,
    complexity_ratio: f64,
    p_trans_MW: f64,
    sizing: SizeReport,
    reduced_g_shape: [usize; 2],
    reduced_h_shape: [usize; 2],
}

fn validate(s: &Session) -> Result<String, Error> {
    let cfg = &s.config;
    let n = s.grid.n_buses();
    // Reduction of the bare grid; any placement adds only stiffly tied nodes.
    let y = build_admittance(&s.grid, &Distribution::empty(n), cfg.coupling_pu)?;
    let reduced = reduce_network(&y.matrix, y.layout.n_g(), 0)?;
    s.scenarios()?
        .iter()
        .try_for_each(|sc| sc.check_against(&s.grid))?;
    let r = ValidateReport {
        n,
        n_G: s.grid.n_generators(),
        n_L: s.grid.n_loads(),
        n_S: cfg.n_storage,
        solutions: count_distributions(n, cfg.n_storage)?,
        complexity_ratio: complexity_ratio(n, cfg.n_storage, cfg.ce.n_iter, cfg.ce.samples)
            .unwrap_or(f64::INFINITY),
        p_trans_MW: s.p_trans / 1e6,
        sizing: size_report(s),
        reduced_g_shape: [reduced.g_matrix().nrows(), reduced.g_matrix().ncols()],
        reduced_h_shape: [reduced.h_matrix().nrows(), reduced.h_matrix().ncols()],
    };
    Ok(report::to_json(&r))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes one trace per scenario under `out/traces`; returns the paths
/// relative to `out`.
fn write_traces(
    out: &Path,
    evaluator: &Evaluator,
    dist: &Distribution,
) -> Result<(Vec<String>, Vec<crate::dynamics::SimulationTrace>), Error> {
    let traces = evaluator.traces(dist)?;
    let stem = report::distribution_hash(dist);
    let mut paths = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        let name = if traces.len() == 1 {
            format!("traces/{stem}.csv")
        } else {
            format!("traces/{stem}_{}.csv", k + 1)
        };
        write_file(&out.join(&name), &report::trace_csv(t))?;
        paths.push(name);
    }
    Ok((paths, traces))
}

#[derive(Debug, Serialize)]
struct ScenarioMetrics {
    scenario: usize,
    f_nadir_hz: f64,
    f_ss_hz: f64,
    f_ss_predicted_hz: f64,
    f_coi_min_hz: f64,
    t_nadir_s: f64,
    settled: bool,
    trace_path: String,
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
struct SimulateReport {
    placement: String,
    f_nadir_hz: f64,
    f_ss_hz: f64,
    f_coi_min_hz: f64,
    storage_per_unit_MWs: f64,
    scenarios: Vec<ScenarioMetrics>,
}

fn simulate_cmd(s: &Session, placement: &str) -> Result<String, Error> {
    let evaluator = s.evaluator()?;
    let dist = Distribution::parse(s.grid.n_buses(), placement)?;
    let out = &s.config.out_dir;
    let (paths, traces) = write_traces(out, &evaluator, &dist)?;
    let hz = |w: f64| w / (2.0 * std::f64::consts::PI);
    let w0 = s.grid.omega0();
    let per_unit = evaluator.sizing().per_unit_inverse_damping;
    let mut scenarios = Vec::new();
    for (k, ((trace, path), sc)) in traces
        .iter()
        .zip(paths)
        .zip(evaluator.scenarios())
        .enumerate()
    {
        let m = frequency_nadir(trace)?;
        let predicted = predict_steady_state(&s.grid, &dist, per_unit, sc.final_transient_power())?;
        scenarios.push(ScenarioMetrics {
            scenario: k + 1,
            f_nadir_hz: hz(m.nadir_omega),
            f_ss_hz: hz(m.steady_state_omega),
            f_ss_predicted_hz: hz(w0 + predicted),
            f_coi_min_hz: hz(m.coi_min_omega),
            t_nadir_s: m.time_of_nadir,
            settled: m.settled,
            trace_path: path,
        });
    }
    let worst = evaluator.evaluate(&dist)?;
    let r = SimulateReport {
        placement: dist.label(),
        f_nadir_hz: worst.nadir_hz,
        f_ss_hz: worst.steady_state_hz,
        f_coi_min_hz: worst.coi_min_hz,
        storage_per_unit_MWs: per_unit / 1e6,
        scenarios,
    };
    let json = report::to_json(&r);
    write_file(&out.join("metrics.json"), &json)?;
    Ok(json)
}

fn search_cmd(s: &Session, method: Method) -> Result<String, Error> {
    let cfg = &s.config;
    let evaluator = s.evaluator()?;
    let workers = s.workers()?;
    let out = &cfg.out_dir;
    let n = s.grid.n_buses();

    let mut brute: Option<(EvaluationRecord, u64)> = None;
    let mut ce: Option<(EvaluationRecord, u64)> = None;
    let mut ranking_path = None;
    let mut convergence_path = None;
    if method.runs_brute() {
        let started = Instant::now();
        let result =
            brute_force_search(&evaluator, cfg.brute_budget, cfg.ce.evaluations(), &workers)?;
        eprintln!(
            "brute force: {} evaluations in {:.2} s",
            result.ranking.len(),
            started.elapsed().as_secs_f64()
        );
        warn_flags(&result.ranking);
        write_file(
            &out.join("ranking.csv"),
            &report::ranking_csv(&result.ranking),
        )?;
        ranking_path = Some("ranking.csv".to_string());
        brute = Some((result.best, result.ranking.len() as u64));
    }
    if method.runs_ce() {
        let started = Instant::now();
        let result = ce_search(&evaluator, &cfg.ce, &workers)?;
        eprintln!(
            "CE: {} iterations, {} distinct evaluations in {:.2} s",
            result.history.len(),
            result.evaluations,
            started.elapsed().as_secs_f64()
        );
        write_file(
            &out.join("convergence.csv"),
            &report::convergence_csv(&result.history, n),
        )?;
        convergence_path = Some("convergence.csv".to_string());
        ce = Some((result.best, cfg.ce.evaluations()));
    }

    let best = match (&brute, &ce) {
        (Some((b, _)), _) | (None, Some((b, _))) => b.clone(),
        (None, None) => unreachable!("every method runs at least one search"),
    };
    let comparison = match (&brute, &ce) {
        (Some((b, nb)), Some((c, nc))) => {
            let ratio = complexity_ratio(n, cfg.n_storage, cfg.ce.n_iter, cfg.ce.samples)
                .unwrap_or(f64::INFINITY);
            Some(Comparison {
                brute: b.into(),
                ce: c.into(),
                same_best: b.distribution == c.distribution,
                brute_evaluations: *nb,
                ce_evaluations: *nc,
                complexity_ratio: ratio,
                recommendation: report::recommend(ratio),
            })
        }
        _ => None,
    };
    if ce.is_some() && brute.is_none() {
        warn_flags(std::slice::from_ref(&best));
    }
    let (trace_paths, _) = write_traces(out, &evaluator, &best.distribution)?;
    let sizing = evaluator.sizing();
    let r = SearchReport {
        best: BestSummary::from(&best),
        n_storage: cfg.n_storage,
        storage_total_mws: sizing.total_mws(),
        storage_per_unit_mws: sizing.per_unit_mws(),
        ranking_csv_path: ranking_path,
        convergence_csv_path: convergence_path,
        best_trace_paths: trace_paths,
        comparison,
    };
    let json = report::to_json(&r);
    write_file(&out.join("report.json"), &json)?;
    Ok(json)
}

/// One summary warning for placements whose transient swung generators
/// to both sides of nominal or had not settled by the horizon.
fn warn_flags(records: &[EvaluationRecord]) {
    let mixed = records.iter().filter(|r| r.mixed_sign).count();
    let unsettled = records.iter().filter(|r| !r.settled).count();
    if mixed > 0 {
        log::warn!(
            "{mixed} of {} placements swing generators both ways; the worse side sets the nadir",
            records.len()
        );
    }
    if unsettled > 0 {
        log::warn!(
            "{unsettled} of {} placements have not settled by the horizon",
            records.len()
        );
    }
}

fn enumerate_cmd(
    config: Option<&Path>,
    buses: Option<usize>,
    units: Option<u32>,
    count_only: bool,
) -> Result<String, Error> {
    let (n, k) = match (config, buses, units) {
        (Some(path), _, _) => {
            let cfg = RunConfig::load(path)?;
            let s = Session::from_config(cfg)?;
            (s.grid.n_buses(), s.config.n_storage)
        }
        (None, Some(n), Some(k)) => (n, k),
        _ => {
            return Err(OptimizeError::InvalidArgument(
                "enumerate needs --config or both --buses and --units".into(),
            )
            .into())
        }
    };
    let count = count_distributions(n, k)?;
    if count_only {
        return Ok(format!("{count}\n"));
    }
    let mut out = String::new();
    for d in enumerate_distributions(n, k)? {
        out.push_str(&d.label());
        out.push('\n');
    }
    Ok(out)
}

/// Runs a parsed command and returns what it prints on stdout.
pub fn run(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::Validate(c) => validate(&Session::load(c)?),
        Command::Size(c) => Ok(report::to_json(&size_report(&Session::load(c)?))),
        Command::Simulate { common, placement } => simulate_cmd(&Session::load(common)?, placement),
        Command::Search { common, method } => {
            let s = Session::load(common)?;
            let m = method.unwrap_or(s.config.method);
            search_cmd(&s, m)
        }
        Command::Enumerate {
            config,
            buses,
            units,
            count,
        } => enumerate_cmd(config.as_deref(), *buses, *units, *count),
    }
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("GSP_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
