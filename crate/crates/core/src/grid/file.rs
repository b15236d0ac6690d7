//! Grid file reader and writer.
//!
//! ```text
//! [bases]
//! f0_hz = 50
//! v_base_kv = 400
//! p_base_mva = 100
//!
//! [buses]
//! # id  kind       P_rt_MW  H  p_f  alpha
//! 1     generator  1000     6  2    0.05
//! 2     load
//!
//! [lines]
//! # from  to  b_pu
//! 1       2   5
//!
//! [loads]
//! # bus  P_MW   (negative = renewable infeed)
//! 2      300
//! ```
//!
//! `[bases]` is optional and falls back to 50 Hz, 400 kV, 100 MVA.
//! `[loads]` is optional; unlisted load buses carry zero load.

use std::fmt::Write as _;

use super::model::{Bases, Bus, BusId, BusKind, GeneratorParams, GridModel, LineSpec, LoadSpec};
use super::GridError;
use crate::textfmt::{parse_sections, Record, SyntaxError};

pub fn parse_grid(text: &str) -> Result<GridModel, GridError> {
    let sections = parse_sections(text)?;
    let mut bases = Bases::default();
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut loads = Vec::new();
    let mut have_buses = false;

    for section in &sections {
        match section.name {
            "bases" => {
                for rec in &section.records {
                    let (key, _) = rec.key_value()?;
                    let value_idx = rec.tokens.len() - 1;
                    let v = rec.f64_at(value_idx, key.text)?;
                    check_positive(rec, value_idx, key.text, v)?;
                    match key.text {
                        "f0_hz" => bases.f0_hz = v,
                        "v_base_kv" => bases.v_base_kv = v,
                        "p_base_mva" => bases.p_base_mva = v,
                        other => {
                            return Err(rec.error(0, format!("unknown base '{other}'")).into())
                        }
                    }
                }
            }
            "buses" => {
                have_buses = true;
                for rec in &section.records {
                    buses.push(parse_bus(rec)?);
                }
            }
            "lines" => {
                for rec in &section.records {
                    rec.expect_len(&[3])?;
                    let from = bus_id(rec, 0)?;
                    let to = bus_id(rec, 1)?;
                    let b = rec.f64_at(2, "susceptance")?;
                    check_positive(rec, 2, "susceptance", b)?;
                    lines.push(LineSpec {
                        from,
                        to,
                        susceptance: b,
                    });
                }
            }
            "loads" => {
                for rec in &section.records {
                    rec.expect_len(&[2])?;
                    loads.push(LoadSpec {
                        bus: bus_id(rec, 0)?,
                        p_mw: rec.f64_at(1, "load")?,
                    });
                }
            }
            other => {
                return Err(
                    SyntaxError::new(section.line, 1, format!("unknown section [{other}]")).into(),
                )
            }
        }
    }
    if !have_buses {
        return Err(SyntaxError::new(1, 1, "missing [buses] section").into());
    }
    GridModel::new(bases, buses, lines, loads)
}

fn check_positive(rec: &Record<'_>, idx: usize, what: &str, v: f64) -> Result<(), GridError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(GridError::NonPositiveAt {
            what: what.to_string(),
            line: rec.line,
            column: rec.tokens[idx].column,
        })
    }
}

fn bus_id(rec: &Record<'_>, idx: usize) -> Result<BusId, GridError> {
    let v = rec.u64_at(idx, "bus id")?;
    if v == 0 || v > u64::from(u32::MAX) {
        return Err(rec.error(idx, "bus id must be in 1..=2^32-1").into());
    }
    Ok(BusId(v as u32))
}

fn parse_bus(rec: &Record<'_>) -> Result<Bus, GridError> {
    let id = bus_id(rec, 0)?;
    let kind = rec.token(1, "bus kind")?;
    match kind.text {
        "load" => {
            rec.expect_len(&[2])?;
            Ok(Bus {
                id,
                kind: BusKind::Load,
            })
        }
        "generator" => {
            rec.expect_len(&[6])?;
            let rated_power_mw = rec.f64_at(2, "rated power")?;
            check_positive(rec, 2, "rated power", rated_power_mw)?;
            let inertia_h = rec.f64_at(3, "inertia constant")?;
            check_positive(rec, 3, "inertia constant", inertia_h)?;
            let poles = rec.u64_at(4, "pole count")?;
            if poles == 0 || poles % 2 != 0 || poles > u64::from(u32::MAX) {
                return Err(rec
                    .error(4, "pole count must be a positive even integer")
                    .into());
            }
            let droop_alpha = rec.f64_at(5, "droop fraction")?;
            check_positive(rec, 5, "droop fraction", droop_alpha)?;
            Ok(Bus {
                id,
                kind: BusKind::Generator(GeneratorParams {
                    rated_power_mw,
                    inertia_h,
                    poles: poles as u32,
                    droop_alpha,
                }),
            })
        }
        other => Err(rec
            .error(
                1,
                format!("bus kind must be 'generator' or 'load', got '{other}'"),
            )
            .into()),
    }
}

/// Writes a grid in the canonical file layout. Floats use the shortest
/// representation that parses back to the same value.
pub fn serialize_grid(grid: &GridModel) -> String {
    let mut out = String::new();
    let b = grid.bases();
    let _ = writeln!(out, "[bases]");
    let _ = writeln!(out, "f0_hz = {}", b.f0_hz);
    let _ = writeln!(out, "v_base_kv = {}", b.v_base_kv);
    let _ = writeln!(out, "p_base_mva = {}", b.p_base_mva);
    let _ = writeln!(out, "\n[buses]\n# id kind P_rt_MW H p_f alpha");
    for bus in grid.buses() {
        match &bus.kind {
            BusKind::Generator(g) => {
                let _ = writeln!(
                    out,
                    "{} generator {} {} {} {}",
                    bus.id, g.rated_power_mw, g.inertia_h, g.poles, g.droop_alpha
                );
            }
            BusKind::Load => {
                let _ = writeln!(out, "{} load", bus.id);
            }
        }
    }
    let _ = writeln!(out, "\n[lines]\n# from to b_pu");
    for l in grid.lines() {
        let _ = writeln!(out, "{} {} {}", l.from, l.to, l.susceptance);
    }
    if !grid.loads().is_empty() {
        let _ = writeln!(out, "\n[loads]\n# bus P_MW");
        for l in grid.loads() {
            let _ = writeln!(out, "{} {}", l.bus, l.p_mw);
        }
    }
    out
}
