use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{EnergyRates, Time};

/// Status/load combination an interval of vehicle time is billed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadClass {
    NotMoving,
    /// Moving with this many products on board.
    Moving(u8),
    /// Plugged in; no consumption.
    Charging,
}

impl LoadClass {
    pub fn rate(self, rates: &EnergyRates) -> f64 {
        match self {
            LoadClass::NotMoving => rates.not_moving,
            LoadClass::Moving(k) => {
                let k = usize::from(k);
                rates.moving.get(k).copied().unwrap_or_else(|| *rates.moving.last().unwrap())
            }
            LoadClass::Charging => 0.0,
        }
    }

    pub fn is_moving(self) -> bool {
        matches!(self, LoadClass::Moving(_))
    }
}

impl fmt::Display for LoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadClass::NotMoving => f.write_str("not-moving"),
            LoadClass::Moving(k) => write!(f, "moving-{k}"),
            LoadClass::Charging => f.write_str("charging"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub start: Time,
    pub end: Time,
    pub class: LoadClass,
    pub pct: f64,
}

/// Per-vehicle consumption history. Intervals of one vehicle are contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    entries: Vec<Vec<LedgerEntry>>,
    initial: Vec<f64>,
    recharged: Vec<f64>,
    recharges: Vec<usize>,
}

impl EnergyLedger {
    pub fn new(initial: &[f64]) -> Self {
        let n = initial.len();
        Self {
            entries: vec![Vec::new(); n],
            initial: initial.to_vec(),
            recharged: vec![0.0; n],
            recharges: vec![0; n],
        }
    }

    pub fn push(&mut self, aiv: usize, entry: LedgerEntry) {
        self.entries[aiv].push(entry);
    }

    pub fn record_recharge(&mut self, aiv: usize, amount: f64) {
        self.recharged[aiv] += amount;
        self.recharges[aiv] += 1;
    }

    pub fn entries(&self, aiv: usize) -> &[LedgerEntry] {
        &self.entries[aiv]
    }

    pub fn initial(&self, aiv: usize) -> f64 {
        self.initial[aiv]
    }

    pub fn recharged(&self, aiv: usize) -> f64 {
        self.recharged[aiv]
    }

    pub fn recharge_count(&self, aiv: usize) -> usize {
        self.recharges[aiv]
    }

    pub fn n_aivs(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self, aiv: usize) -> f64 {
        self.entries[aiv].iter().map(|e| e.pct).sum()
    }

    pub fn total_all(&self) -> f64 {
        (0..self.n_aivs()).map(|a| self.total(a)).sum()
    }

    /// Consumption of one vehicle over `[t0, t1]`, pro-rating intervals that
    /// straddle the window edges.
    pub fn consumed_between(&self, aiv: usize, t0: Time, t1: Time) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        self.entries[aiv]
            .iter()
            .filter(|e| e.end > t0 && e.start < t1)
            .map(|e| {
                let len = e.end - e.start;
                if len <= 0.0 {
                    return 0.0;
                }
                let lo = e.start.max(t0);
                let hi = e.end.min(t1);
                if lo == e.start && hi == e.end {
                    e.pct
                } else {
                    e.pct * (hi - lo) / len
                }
            })
            .sum()
    }

    /// `initial - battery + recharged - Σ consumed`; zero up to rounding.
    pub fn conservation_residual(&self, aiv: usize, battery: f64) -> f64 {
        self.initial[aiv] - battery + self.recharged[aiv] - self.total(aiv)
    }

    /// Intervals of each vehicle are ordered, non-overlapping and gap-free.
    pub fn is_contiguous(&self, aiv: usize) -> bool {
        self.entries[aiv].windows(2).all(|w| w[0].end == w[1].start)
            && self.entries[aiv].iter().all(|e| e.end >= e.start)
    }
}
