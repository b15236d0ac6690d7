//! Deterministic text artifacts: traces, rankings, convergence and JSON
//! summaries. Frequencies are written in Hz.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::SimulationTrace;
use crate::optimize::{CeIteration, Distribution, EvaluationRecord};

const SIGNIFICANT: usize = 9;

fn hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// `x` with nine significant digits: positional for moderate magnitudes,
/// scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-4..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Stable file stem for a placement: the first 16 hex digits of the
/// SHA-256 of its label.
pub fn distribution_hash(d: &Distribution) -> String {
    let digest = Sha256::digest(d.label().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `t, omega_G_*, omega_S_*, E_S_*, delta_*` with Hz, J and rad.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let mut out = String::from("t");
    for g in &trace.generator_names {
        let _ = write!(out, ",omega_G_{g}");
    }
    for s in &trace.storage_names {
        let _ = write!(out, ",omega_S_{s}");
    }
    for s in &trace.storage_names {
        let _ = write!(out, ",E_S_{s}");
    }
    for a in &trace.angle_names {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    for (k, &t) in trace.times.iter().enumerate() {
        out.push_str(&fmt_sig(t));
        let cols = trace
            .omega_g
            .iter()
            .chain(&trace.omega_s)
            .map(|s| hz(s[k]))
            .chain(trace.energy_s.iter().map(|s| s[k]))
            .chain(trace.angles.iter().map(|s| s[k]));
        for v in cols {
            out.push(',');
            out.push_str(&fmt_sig(v));
        }
        out.push('\n');
    }
    out
}

pub fn ranking_csv(ranking: &[EvaluationRecord]) -> String {
    let mut out = String::from("rank,counts,cost_hz,f_nadir_hz,f_coi_min_hz,f_ss_hz\n");
    for (i, r) in ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            r.distribution.label(),
            fmt_sig(r.cost_hz()),
            fmt_sig(r.nadir_hz),
            fmt_sig(r.coi_min_hz),
            fmt_sig(r.steady_state_hz),
        );
    }
    out
}

pub fn convergence_csv(history: &[CeIteration], n_buses: usize) -> String {
    let mut out = String::from("iteration,best_cost_hz,gamma_hz,best_counts");
    for i in 1..=n_buses {
        let _ = write!(out, ",q_{i}");
    }
    out.push('\n');
    for h in history {
        let _ = write!(
            out,
            "{},{},{},{}",
            h.iteration,
            fmt_sig(h.best.cost_hz()),
            fmt_sig(hz(h.gamma)),
            h.best.distribution.label()
        );
        for q in &h.q {
            out.push(',');
            out.push_str(&fmt_sig(*q));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BestSummary {
    pub counts: String,
    pub units_per_bus: Vec<u32>,
    pub cost_hz: f64,
    pub nadir_hz: f64,
    pub coi_min_hz: f64,
    pub f_ss_hz: f64,
}

impl From<&EvaluationRecord> for BestSummary {
    fn from(r: &EvaluationRecord) -> Self {
        Self {
            counts: r.distribution.label(),
            units_per_bus: r.distribution.counts().to_vec(),
            cost_hz: r.cost_hz(),
            nadir_hz: r.nadir_hz,
            coi_min_hz: r.coi_min_hz,
            f_ss_hz: r.steady_state_hz,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub brute: BestSummary,
    pub ce: BestSummary,
    pub same_best: bool,
    pub brute_evaluations: u64,
    pub ce_evaluations: u64,
    pub complexity_ratio: f64,
    pub recommendation: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub best: BestSummary,
    pub n_storage: u32,
    pub storage_total_mws: f64,
    pub storage_per_unit_mws: f64,
    pub ranking_csv_path: Option<String>,
    pub convergence_csv_path: Option<String>,
    pub best_trace_paths: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

/// Advice for picking a method from the complexity ratio.
pub fn recommend(ratio: f64) -> String {
    if ratio <= 1.0 {
        "complexity ratio <= 1: brute force costs no more than CE and is exact".into()
    } else if ratio < 10.0 {
        "complexity ratio near 1: brute force is affordable and exact".into()
    } else {
        "complexity ratio well above 1: prefer the CE method".into()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
