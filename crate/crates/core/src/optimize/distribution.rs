use std::cmp::Ordering;
use std::fmt;

use super::OptimizeError;
use crate::grid::BusId;

/// Multiset of storage units over buses: `counts[i]` units at bus `i + 1`.
///
/// Ordering is the enumeration order: comparing the ascending lists of
/// unit locations lexicographically, which for equal totals is the
/// descending lexicographic order of the count vectors
/// (`200 < 110 < 101 < 020 < 011 < 002`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Distribution {
    counts: Vec<u32>,
}

impl Distribution {
    pub fn empty(n_buses: usize) -> Self {
        Self {
            counts: vec![0; n_buses],
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    /// Aggregates individual unit locations (zero-based bus indices).
    pub fn from_draws(n_buses: usize, draws: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0; n_buses];
        for d in draws {
            counts[d] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n_buses(&self) -> usize {
        self.counts.len()
    }

    pub fn total_units(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn units_at(&self, bus: BusId) -> u32 {
        self.counts.get(bus.index()).copied().unwrap_or(0)
    }

    /// Occupied buses with their unit counts, ascending by bus.
    pub fn occupied(&self) -> impl Iterator<Item = (BusId, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (BusId::from_index(i), c))
    }

    /// Compact `bus:units` list, space separated; `none` when empty.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.occupied().map(|(b, c)| format!("{b}:{c}")).collect();
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Parses `7:2,10:3` (commas or spaces; a bare `7` means one unit;
    /// `none` or an empty string is the empty placement).
    pub fn parse(n_buses: usize, text: &str) -> Result<Self, OptimizeError> {
        let mut counts = vec![0u32; n_buses];
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "none" {
            return Ok(Self { counts });
        }
        for part in trimmed.split([',', ' ']).filter(|p| !p.is_empty()) {
            let (bus, units) = match part.split_once(':') {
                Some((b, u)) => (b, u),
                None => (part, "1"),
            };
            let bad = || OptimizeError::InvalidDistribution(format!("cannot parse '{part}'"));
            let bus: u32 = bus.trim().parse().map_err(|_| bad())?;
            let units: u32 = units.trim().parse().map_err(|_| bad())?;
            if bus == 0 || bus as usize > n_buses {
                return Err(OptimizeError::InvalidDistribution(format!(
                    "bus {bus} is outside the grid (1..={n_buses})"
                )));
            }
            counts[bus as usize - 1] += units;
        }
        Ok(Self { counts })
    }
}

impl Ord for Distribution {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .counts
            .cmp(&self.counts)
            .then_with(|| self.counts.len().cmp(&other.counts.len()))
    }
}

impl PartialOrd for Distribution {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.occupied().map(|(b, c)| format!("{b}:{c}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `C(n + units - 1, units)`: the number of ways to place `units`
/// indistinguishable units on `n` buses.
pub fn count_distributions(n: usize, units: u32) -> Result<u64, OptimizeError> {
    if n == 0 {
        return Err(OptimizeError::InvalidArgument(
            "bus count must be at least 1".into(),
        ));
    }
    let overflow = || OptimizeError::Overflow { n, units };
    let mut acc: u128 = 1;
    for i in 1..=u128::from(units) {
        // acc = C(n - 2 + i, i - 1) here, so the division is exact.
        acc = acc.checked_mul(n as u128 - 1 + i).ok_or_else(overflow)? / i;
    }
    u64::try_from(acc).map_err(|_| overflow())
}

/// Streams every distribution of `units` over `n` buses exactly once, in
/// [`Distribution`] order.
pub fn enumerate_distributions(n: usize, units: u32) -> Result<Enumeration, OptimizeError> {
    let total = count_distributions(n, units)?;
    Ok(Enumeration {
        n,
        slots: vec![0; units as usize],
        remaining: total,
    })
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    /// Nondecreasing bus indices of each unit.
    slots: Vec<usize>,
    remaining: u64,
}

impl Iterator for Enumeration {
    type Item = Distribution;

    fn next(&mut self) -> Option<Distribution> {
        if self.remaining == 0 {
            return None;
        }
        let out = Distribution::from_draws(self.n, self.slots.iter().copied());
        self.remaining -= 1;
        if let Some(i) = self.slots.iter().rposition(|&s| s + 1 < self.n) {
            let v = self.slots[i] + 1;
            self.slots[i..].iter_mut().for_each(|s| *s = v);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}
