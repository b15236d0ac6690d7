//! Run configuration, in the sectioned text format or as JSON.
//!
//! ```text
//! [run]
//! grid = grid6.grid          # relative to this file
//! n_storage = 2
//! method = both              # brute | ce | both
//! aggregate = worst          # worst | single
//! coupling_pu = 1000
//! deviation_units = rad_s    # rad_s | hz
//! out = out
//! brute_budget = 100000
//! workers = 0                # 0 = one per core
//!
//! [sizing]
//! delta_f_ss_max_hz = 0.2
//! p_trans_mw = 200           # optional; default is the largest scenario loss
//!
//! [storage]
//! alpha_s = 0.1
//! charge_eff = 1
//! discharge_eff = 1
//!
//! [simulation]
//! dt = 0.001
//! horizon = 30
//! blowup_hz = 10
//!
//! [ce]
//! iterations = 15
//! samples = 40
//! elite_fraction = 0.125
//! smoothing = 0.5
//! seed = 1
//!
//! [events]
//! # bus  MW   onset_s
//! 6      200  1.0
//! ```
//!
//! The JSON form nests the same keys under the section names, with
//! `"events": [{"bus": 6, "mw": 200, "onset": 1.0}]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Aggregate, LoadStep, SimSettings, StorageParams, DEFAULT_HORIZON};
use crate::grid::BusId;
use crate::optimize::{CeConfig, DEFAULT_BRUTE_BUDGET};
use crate::sizing::DeviationUnits;
use crate::textfmt::{parse_sections, Record, SyntaxError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Syntax {
        path: String,
        #[source]
        source: SyntaxError,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Grid {
        path: String,
        #[source]
        source: crate::grid::GridError,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Ce,
    #[default]
    Both,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "brute" => Ok(Self::Brute),
            "ce" => Ok(Self::Ce),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "method must be 'brute', 'ce' or 'both', got '{other}'"
            )),
        }
    }
}

impl Method {
    pub fn runs_brute(self) -> bool {
        matches!(self, Method::Brute | Method::Both)
    }

    pub fn runs_ce(self) -> bool {
        matches!(self, Method::Ce | Method::Both)
    }
}

/// One configured step: `mw` MW more net load at `bus` from `onset` s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub bus: u32,
    pub mw: f64,
    #[serde(default)]
    pub onset: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    grid: Option<String>,
    n_storage: Option<u32>,
    method: Option<Method>,
    aggregate: Option<Aggregate>,
    coupling_pu: Option<f64>,
    deviation_units: Option<DeviationUnits>,
    out: Option<String>,
    brute_budget: Option<u64>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SizingSection {
    delta_f_ss_max_hz: Option<f64>,
    p_trans_mw: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StorageSection {
    alpha_s: Option<f64>,
    charge_eff: Option<f64>,
    discharge_eff: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulationSection {
    dt: Option<f64>,
    horizon: Option<f64>,
    blowup_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CeSection {
    iterations: Option<u32>,
    samples: Option<u32>,
    elite_fraction: Option<f64>,
    smoothing: Option<f64>,
    seed: Option<u64>,
}

/// Unresolved file contents; every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    run: RunSection,
    sizing: SizingSection,
    storage: StorageSection,
    simulation: SimulationSection,
    ce: CeSection,
    events: Vec<EventSpec>,
}

/// Validated configuration with paths resolved and defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid_path: PathBuf,
    pub n_storage: u32,
    pub method: Method,
    pub aggregate: Aggregate,
    pub coupling_pu: f64,
    pub deviation_units: DeviationUnits,
    pub out_dir: PathBuf,
    pub brute_budget: u64,
    pub workers: usize,
    pub delta_f_ss_max_hz: f64,
    pub p_trans_mw: Option<f64>,
    #[serde(skip)]
    pub storage: StorageParams,
    #[serde(skip)]
    pub sim: SimSettings,
    pub horizon: f64,
    pub ce: CeConfig,
    pub events: Vec<EventSpec>,
}

impl RunConfig {
    /// Reads a text or JSON (`.json`, or content starting with `{`) config.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_at(&text, path, base)
    }

    /// Parses `text` as if read from `path`; relative paths resolve against `base`.
    pub fn from_str_at(text: &str, path: &Path, base: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let is_json =
            path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let file = if is_json {
            serde_json::from_str(text).map_err(|source| ConfigError::Json {
                path: name.clone(),
                source,
            })?
        } else {
            parse_text(text).map_err(|source| ConfigError::Syntax {
                path: name.clone(),
                source,
            })?
        };
        resolve(file, base).map_err(|message| ConfigError::Invalid {
            path: name,
            message,
        })
    }

    pub fn load_steps(&self) -> Vec<LoadStep> {
        self.events
            .iter()
            .map(|e| LoadStep {
                bus: BusId(e.bus),
                delta_p: e.mw * 1e6,
                onset: e.onset,
            })
            .collect()
    }

    /// Steady-state limit in the unit the sizing bound expects.
    pub fn delta_omega_limit(&self) -> f64 {
        self.deviation_units.limit_value(self.delta_f_ss_max_hz)
    }
}

fn resolve(f: ConfigFile, base: &Path) -> Result<RunConfig, String> {
    let positive = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{what} must be positive"))
        }
    };
    let grid = f.run.grid.ok_or("missing 'grid' in [run]")?;
    let n_storage = f.run.n_storage.ok_or("missing 'n_storage' in [run]")?;
    let delta_f = f
        .sizing
        .delta_f_ss_max_hz
        .ok_or("missing 'delta_f_ss_max_hz' in [sizing]")?;
    let defaults_storage = StorageParams::default();
    let storage = StorageParams {
        filter_alpha: positive(
            f.storage.alpha_s.unwrap_or(defaults_storage.filter_alpha),
            "alpha_s",
        )?,
        charge_eff: f.storage.charge_eff.unwrap_or(1.0),
        discharge_eff: f.storage.discharge_eff.unwrap_or(1.0),
    };
    for (what, eff) in [
        ("charge_eff", storage.charge_eff),
        ("discharge_eff", storage.discharge_eff),
    ] {
        if !(eff > 0.0 && eff <= 1.0) {
            return Err(format!("{what} must lie in (0, 1]"));
        }
    }
    let default_sim = SimSettings::default();
    let sim = SimSettings {
        dt: positive(f.simulation.dt.unwrap_or(default_sim.dt), "dt")?,
        blowup: match f.simulation.blowup_hz {
            Some(hz) => 2.0 * std::f64::consts::PI * positive(hz, "blowup_hz")?,
            None => default_sim.blowup,
        },
    };
    let dce = CeConfig::default();
    let ce = CeConfig {
        n_iter: f.ce.iterations.unwrap_or(dce.n_iter),
        samples: f.ce.samples.unwrap_or(dce.samples),
        elite_fraction: f.ce.elite_fraction.unwrap_or(dce.elite_fraction),
        smoothing: f.ce.smoothing.unwrap_or(dce.smoothing),
        seed: f.ce.seed.unwrap_or(dce.seed),
    };
    ce.validate().map_err(|e| e.to_string())?;
    if let Some(p) = f.sizing.p_trans_mw {
        if !(p >= 0.0 && p.is_finite()) {
            return Err("p_trans_mw must be non-negative".into());
        }
    }
    for e in &f.events {
        if !e.mw.is_finite() || !e.onset.is_finite() {
            return Err(format!(
                "event at bus {} must have finite power and onset",
                e.bus
            ));
        }
    }
    Ok(RunConfig {
        grid_path: base.join(grid),
        n_storage,
        method: f.run.method.unwrap_or_default(),
        aggregate: f.run.aggregate.unwrap_or_default(),
        coupling_pu: positive(
            f.run
                .coupling_pu
                .unwrap_or(crate::grid::DEFAULT_COUPLING_PU),
            "coupling_pu",
        )?,
        deviation_units: f.run.deviation_units.unwrap_or_default(),
        out_dir: base.join(f.run.out.unwrap_or_else(|| "out".into())),
        brute_budget: f.run.brute_budget.unwrap_or(DEFAULT_BRUTE_BUDGET),
        workers: f.run.workers.unwrap_or(0),
        delta_f_ss_max_hz: positive(delta_f, "delta_f_ss_max_hz")?,
        p_trans_mw: f.sizing.p_trans_mw,
        storage,
        sim,
        horizon: positive(f.simulation.horizon.unwrap_or(DEFAULT_HORIZON), "horizon")?,
        ce,
        events: f.events,
    })
}

fn parse_text(text: &str) -> Result<ConfigFile, SyntaxError> {
    let mut f = ConfigFile::default();
    for section in parse_sections(text)? {
        if section.name == "events" {
            for rec in &section.records {
                rec.expect_len(&[2, 3])?;
                let bus = rec.u64_at(0, "bus id")?;
                let bus = u32::try_from(bus).map_err(|_| rec.error(0, "bus id out of range"))?;
                let mw = rec.f64_at(1, "event power")?;
                let onset = if rec.tokens.len() == 3 {
                    rec.f64_at(2, "onset")?
                } else {
                    0.0
                };
                f.events.push(EventSpec { bus, mw, onset });
            }
            continue;
        }
        for rec in &section.records {
            let (key, value) = rec.key_value()?;
            let vi = rec.tokens.len() - 1;
            let text_val = || value.text.to_string();
            let num = || rec.f64_at(vi, key.text);
            let int = || rec.u64_at(vi, key.text);
            let small = || {
                int().and_then(|v| {
                    u32::try_from(v)
                        .map_err(|_| rec.error(vi, format!("{}: value too large", key.text)))
                })
            };
            match (section.name, key.text) {
                ("run", "grid") => f.run.grid = Some(text_val()),
                ("run", "n_storage") => f.run.n_storage = Some(small()?),
                ("run", "method") => {
                    f.run.method = Some(value.text.parse().map_err(|m: String| rec.error(vi, m))?)
                }
                ("run", "aggregate") => {
                    f.run.aggregate =
                        Some(value.text.parse().map_err(|m: String| rec.error(vi, m))?)
                }
                ("run", "coupling_pu") => f.run.coupling_pu = Some(num()?),
                ("run", "deviation_units") => {
                    f.run.deviation_units =
                        Some(value.text.parse().map_err(|m: String| rec.error(vi, m))?)
                }
                ("run", "out") => f.run.out = Some(text_val()),
                ("run", "brute_budget") => f.run.brute_budget = Some(int()?),
                ("run", "workers") => f.run.workers = Some(int()? as usize),
                ("sizing", "delta_f_ss_max_hz") => f.sizing.delta_f_ss_max_hz = Some(num()?),
                ("sizing", "p_trans_mw") => f.sizing.p_trans_mw = Some(num()?),
                ("storage", "alpha_s") => f.storage.alpha_s = Some(num()?),
                ("storage", "charge_eff") => f.storage.charge_eff = Some(num()?),
                ("storage", "discharge_eff") => f.storage.discharge_eff = Some(num()?),
                ("simulation", "dt") => f.simulation.dt = Some(num()?),
                ("simulation", "horizon") => f.simulation.horizon = Some(num()?),
                ("simulation", "blowup_hz") => f.simulation.blowup_hz = Some(num()?),
                ("ce", "iterations") => f.ce.iterations = Some(small()?),
                ("ce", "samples") => f.ce.samples = Some(small()?),
                ("ce", "elite_fraction") => f.ce.elite_fraction = Some(num()?),
                ("ce", "smoothing") => f.ce.smoothing = Some(num()?),
                ("ce", "seed") => f.ce.seed = Some(int()?),
                ("run" | "sizing" | "storage" | "simulation" | "ce", other) => {
                    return Err(unknown(rec, section.name, other))
                }
                (other, _) => {
                    return Err(SyntaxError::new(
                        section.line,
                        1,
                        format!("unknown section [{other}]"),
                    ))
                }
            }
        }
    }
    Ok(f)
}

fn unknown(rec: &Record<'_>, section: &str, key: &str) -> SyntaxError {
    rec.error(0, format!("unknown key '{key}' in [{section}]"))
}
