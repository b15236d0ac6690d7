use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GridError;

/// 1-based bus ordinal, dense within a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl BusId {
    /// Zero-based position in dense per-bus arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_index(idx: usize) -> Self {
        BusId(idx as u32 + 1)
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-unit bases and nominal frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bases {
    pub f0_hz: f64,
    pub v_base_kv: f64,
    pub p_base_mva: f64,
}

impl Default for Bases {
    fn default() -> Self {
        Self {
            f0_hz: 50.0,
            v_base_kv: 400.0,
            p_base_mva: 100.0,
        }
    }
}

impl Bases {
    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0_hz
    }

    /// Watts per per-unit of power.
    pub fn p_base_w(&self) -> f64 {
        self.p_base_mva * 1e6
    }
}

/// Generator nameplate data as written in the grid file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub rated_power_mw: f64,
    /// Inertia constant H, seconds.
    pub inertia_h: f64,
    /// Number of magnetic poles p_f (positive, even).
    pub poles: u32,
    /// Droop fraction alpha.
    pub droop_alpha: f64,
}

impl GeneratorParams {
    pub fn rated_power_w(&self) -> f64 {
        self.rated_power_mw * 1e6
    }

    /// Rotor moment of inertia J = 2 H P_rt / w0^2 * (p_f/2)^2, in W s^3.
    pub fn rotor_inertia(&self, omega0: f64) -> f64 {
        let half = f64::from(self.poles) / 2.0;
        2.0 * self.inertia_h * self.rated_power_w() / (omega0 * omega0) * half * half
    }

    /// Droop damping D_G = alpha w0 / P_rt, in 1/(W s).
    pub fn damping(&self, omega0: f64) -> f64 {
        self.droop_alpha * omega0 / self.rated_power_w()
    }

    /// Swing gain K = (p_f/2)^2 / (J w0).
    pub fn swing_gain(&self, omega0: f64) -> f64 {
        let half = f64::from(self.poles) / 2.0;
        half * half / (self.rotor_inertia(omega0) * omega0)
    }

    fn validate(&self, bus: BusId) -> Result<(), GridError> {
        let bad = |what: &str| GridError::NonPositive {
            what: format!("{what} of generator at bus {bus}"),
        };
        if !(self.rated_power_mw > 0.0) {
            return Err(bad("rated power"));
        }
        if !(self.inertia_h > 0.0) {
            return Err(bad("inertia constant"));
        }
        if !(self.droop_alpha > 0.0) {
            return Err(bad("droop fraction"));
        }
        if self.poles == 0 || !self.poles.is_multiple_of(2) {
            return Err(GridError::Invalid(format!(
                "generator at bus {bus}: pole count must be a positive even integer, got {}",
                self.poles
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BusKind {
    Generator(GeneratorParams),
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
}

impl Bus {
    pub fn is_generator(&self) -> bool {
        matches!(self.kind, BusKind::Generator(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSpec {
    pub from: BusId,
    pub to: BusId,
    /// Series susceptance magnitude, per unit.
    pub susceptance: f64,
}

/// Net consumption at a load bus; negative for renewable infeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSpec {
    pub bus: BusId,
    pub p_mw: f64,
}

/// Immutable electrical network description.
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    bases: Bases,
    buses: Vec<Bus>,
    lines: Vec<LineSpec>,
    loads: Vec<LoadSpec>,
}

impl GridModel {
    /// Validates and builds a grid. Buses may be given in any order but
    /// their ids must form the dense range `1..=n`.
    pub fn new(
        bases: Bases,
        mut buses: Vec<Bus>,
        lines: Vec<LineSpec>,
        loads: Vec<LoadSpec>,
    ) -> Result<Self, GridError> {
        for (what, v) in [
            ("nominal frequency", bases.f0_hz),
            ("voltage base", bases.v_base_kv),
            ("power base", bases.p_base_mva),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GridError::NonPositive { what: what.into() });
            }
        }

        let mut seen = BTreeSet::new();
        for b in &buses {
            if b.id.0 == 0 {
                return Err(GridError::Invalid("bus ids start at 1".into()));
            }
            if !seen.insert(b.id) {
                return Err(GridError::DuplicateBus(b.id));
            }
        }
        buses.sort_by_key(|b| b.id);
        for (i, b) in buses.iter().enumerate() {
            if b.id != BusId::from_index(i) {
                return Err(GridError::Invalid(format!(
                    "bus ids must be dense 1..{}; bus {} is missing",
                    buses.len(),
                    BusId::from_index(i)
                )));
            }
            if let BusKind::Generator(g) = &b.kind {
                g.validate(b.id)?;
            }
        }
        if !buses.iter().any(Bus::is_generator) {
            return Err(GridError::Invalid(
                "grid needs at least one generator bus".into(),
            ));
        }

        let n = buses.len();
        let mut pairs = BTreeSet::new();
        for l in &lines {
            for end in [l.from, l.to] {
                if end.0 == 0 || end.index() >= n {
                    return Err(GridError::UnknownBus(end));
                }
            }
            if l.from == l.to {
                return Err(GridError::Invalid(format!(
                    "line {}-{} is a self-loop",
                    l.from, l.to
                )));
            }
            if !(l.susceptance > 0.0) || !l.susceptance.is_finite() {
                return Err(GridError::NonPositive {
                    what: format!("susceptance of line {}-{}", l.from, l.to),
                });
            }
            let key = (l.from.min(l.to), l.from.max(l.to));
            if !pairs.insert(key) {
                return Err(GridError::Invalid(format!(
                    "duplicate line between buses {} and {} (sum parallel lines)",
                    key.0, key.1
                )));
            }
        }

        let mut load_seen = BTreeSet::new();
        for ld in &loads {
            if ld.bus.0 == 0 || ld.bus.index() >= n {
                return Err(GridError::UnknownBus(ld.bus));
            }
            if buses[ld.bus.index()].is_generator() {
                return Err(GridError::Invalid(format!(
                    "load declared at generator bus {}",
                    ld.bus
                )));
            }
            if !load_seen.insert(ld.bus) {
                return Err(GridError::Invalid(format!(
                    "duplicate load at bus {}",
                    ld.bus
                )));
            }
            if !ld.p_mw.is_finite() {
                return Err(GridError::Invalid(format!(
                    "load at bus {} is not finite",
                    ld.bus
                )));
            }
        }

        let grid = Self {
            bases,
            buses,
            lines,
            loads,
        };
        if let Some(island) = grid.unreachable_bus() {
            return Err(GridError::Disconnected(island));
        }
        Ok(grid)
    }

    fn unreachable_bus(&self) -> Option<BusId> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            adj[l.from.index()].push(l.to.index());
            adj[l.to.index()].push(l.from.index());
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s).map(BusId::from_index)
    }

    pub fn bases(&self) -> &Bases {
        &self.bases
    }

    pub fn omega0(&self) -> f64 {
        self.bases.omega0()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        id.0.checked_sub(1).and_then(|i| self.buses.get(i as usize))
    }

    pub fn lines(&self) -> &[LineSpec] {
        &self.lines
    }

    pub fn loads(&self) -> &[LoadSpec] {
        &self.loads
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_generators(&self) -> usize {
        self.buses.iter().filter(|b| b.is_generator()).count()
    }

    pub fn n_loads(&self) -> usize {
        self.n_buses() - self.n_generators()
    }

    /// Generator buses in ascending id order, with their parameters.
    pub fn generators(&self) -> impl Iterator<Item = (BusId, &GeneratorParams)> + '_ {
        self.buses.iter().filter_map(|b| match &b.kind {
            BusKind::Generator(g) => Some((b.id, g)),
            BusKind::Load => None,
        })
    }

    pub fn load_buses(&self) -> impl Iterator<Item = BusId> + '_ {
        self.buses
            .iter()
            .filter(|b| !b.is_generator())
            .map(|b| b.id)
    }

    pub fn is_load_bus(&self, id: BusId) -> bool {
        self.bus(id).is_some_and(|b| !b.is_generator())
    }

    /// Sum of 1/D_G over all generators, in W s.
    pub fn generator_inverse_damping(&self) -> f64 {
        let w0 = self.omega0();
        self.generators().map(|(_, g)| 1.0 / g.damping(w0)).sum()
    }

    /// Net consumption per load bus in watts, ordered like [`Self::load_buses`].
    pub fn load_vector_w(&self) -> Vec<f64> {
        let by_bus: BTreeMap<BusId, f64> = self.loads.iter().map(|l| (l.bus, l.p_mw)).collect();
        self.load_buses()
            .map(|b| by_bus.get(&b).copied().unwrap_or(0.0) * 1e6)
            .collect()
    }

    /// Returns a copy with load buses renumbered by `perm` (old load id -> new
    /// load id). Generator ids are unchanged. Used to check label invariance.
    pub fn relabel_loads(&self, perm: &BTreeMap<BusId, BusId>) -> Result<Self, GridError> {
        let map = |id: BusId| perm.get(&id).copied().unwrap_or(id);
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: map(b.id),
                kind: b.kind,
            })
            .collect();
        let lines = self
            .lines
            .iter()
            .map(|l| LineSpec {
                from: map(l.from),
                to: map(l.to),
                susceptance: l.susceptance,
            })
            .collect();
        let loads = self
            .loads
            .iter()
            .map(|l| LoadSpec {
                bus: map(l.bus),
                p_mw: l.p_mw,
            })
            .collect();
        Self::new(self.bases, buses, lines, loads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen() -> GeneratorParams {
        GeneratorParams {
            rated_power_mw: 1000.0,
            inertia_h: 6.0,
            poles: 2,
            droop_alpha: 0.05,
        }
    }

    #[test]
    fn derived_generator_constants() {
        let g = gen();
        let w0 = 2.0 * PI * 50.0;
        let j = g.rotor_inertia(w0);
        assert!((j - 12e9 / (w0 * w0)).abs() / j < 1e-14);
        assert!((g.swing_gain(w0) - 1.0 / (j * w0)).abs() < 1e-22);
        // K / D_G reduces to 1 / (2 H alpha) for two-pole machines.
        let ratio = g.swing_gain(w0) / g.damping(w0);
        assert!((ratio - 1.0 / (2.0 * 6.0 * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn rejects_disconnected() {
        let buses = vec![
            Bus {
                id: BusId(1),
                kind: BusKind::Generator(gen()),
            },
            Bus {
                id: BusId(2),
                kind: BusKind::Load,
            },
            Bus {
                id: BusId(3),
                kind: BusKind::Load,
            },
        ];
        let lines = vec![LineSpec {
            from: BusId(1),
            to: BusId(2),
            susceptance: 1.0,
        }];
        let err = GridModel::new(Bases::default(), buses, lines, vec![]).unwrap_err();
        assert!(matches!(err, GridError::Disconnected(BusId(3))));
    }

    #[test]
    fn rejects_duplicate_bus() {
        let buses = vec![
            Bus {
                id: BusId(1),
                kind: BusKind::Generator(gen()),
            },
            Bus {
                id: BusId(1),
                kind: BusKind::Load,
            },
        ];
        let err = GridModel::new(Bases::default(), buses, vec![], vec![]).unwrap_err();
        assert!(matches!(err, GridError::DuplicateBus(BusId(1))));
    }

    #[test]
    fn rejects_odd_pole_count() {
        let mut g = gen();
        g.poles = 3;
        let buses = vec![Bus {
            id: BusId(1),
            kind: BusKind::Generator(g),
        }];
        assert!(GridModel::new(Bases::default(), buses, vec![], vec![]).is_err());
    }
}
