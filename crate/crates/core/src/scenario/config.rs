use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::model::AivConfig;

/// Product routings of the case study: per product, the eligible workstation
/// set (0-based) of each operation.
pub const TABLE1_ROUTINGS: [[&[usize]; 3]; 4] = [
    [&[0, 2], &[2, 3], &[1, 2]],
    [&[0, 3], &[0, 3], &[1, 2]],
    [&[3, 4], &[0, 4], &[1, 2]],
    [&[0, 3], &[0, 1], &[2, 3]],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DueDateConfig {
    /// Mean of the due-date coefficient; `None` means `n_jobs / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_mean: Option<f64>,
    pub t_sd: f64,
    pub t_floor: f64,
}

impl Default for DueDateConfig {
    fn default() -> Self {
        Self { t_mean: None, t_sd: 4.0, t_floor: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownConfig {
    pub enabled: bool,
    /// Mean time between unavailabilities.
    pub tbi_mean: f64,
    /// Mean time required to fix.
    pub trf_mean: f64,
    /// Windows are drawn up to this time; `None` means ten horizon estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        Self { enabled: true, tbi_mean: 200.0, trf_mean: 50.0, horizon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_jobs: usize,
    pub n_workstations: usize,
    pub n_chargers: usize,
    /// Per product, per operation, eligible workstations (0-based).
    pub routings: Vec<Vec<Vec<usize>>>,
    /// Mean of the exponential inter-arrival time.
    pub interarrival_mean: f64,
    pub due_date: DueDateConfig,
    pub breakdown: BreakdownConfig,
    /// Inclusive bounds of the integer transfer-time draws.
    pub layout_range: [f64; 2],
    /// Inclusive bounds of the integer processing-time draws.
    pub processing_time_range: [f64; 2],
    pub aiv: AivConfig,
    pub seed: u64,
    /// Seed for the layout stream; `None` uses `seed`. Holding it fixed
    /// while varying `seed` keeps the layout constant across replications.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_seed: Option<u64>,
}

impl ScenarioConfig {
    /// Case-study defaults: four products over five workstations, two
    /// chargers, two vehicles of capacity two.
    pub fn case_study(n_jobs: usize) -> Self {
        Self {
            n_jobs,
            n_workstations: 5,
            n_chargers: 2,
            routings: TABLE1_ROUTINGS
                .iter()
                .map(|p| p.iter().map(|op| op.to_vec()).collect())
                .collect(),
            interarrival_mean: 5.0,
            due_date: DueDateConfig::default(),
            breakdown: BreakdownConfig::default(),
            layout_range: [10.0, 50.0],
            processing_time_range: [5.0, 50.0],
            aiv: AivConfig::default(),
            seed: 0,
            layout_seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Keeps only the first `n` product routings.
    pub fn with_products(mut self, n: usize) -> Result<Self, ScenarioError> {
        if n == 0 || n > self.routings.len() {
            return Err(ScenarioError::InvalidConfig(format!(
                "products must be between 1 and {}",
                self.routings.len()
            )));
        }
        self.routings.truncate(n);
        Ok(self)
    }

    pub fn n_products(&self) -> usize {
        self.routings.len()
    }

    pub fn due_t_mean(&self) -> f64 {
        self.due_date.t_mean.unwrap_or(self.n_jobs as f64 / 4.0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidConfig(m));
        if self.n_jobs == 0 {
            return bad("n_jobs must be positive".into());
        }
        if self.routings.is_empty() {
            return bad("at least one product routing is required".into());
        }
        if self.n_jobs % self.n_products() != 0 {
            return Err(ScenarioError::NotDivisible {
                n_jobs: self.n_jobs,
                n_products: self.n_products(),
            });
        }
        if self.n_workstations == 0 {
            return bad("n_workstations must be positive".into());
        }
        if self.n_chargers == 0 {
            return bad("n_chargers must be positive".into());
        }
        for (p, ops) in self.routings.iter().enumerate() {
            if ops.is_empty() {
                return bad(format!("product {p} has an empty routing"));
            }
            for (o, set) in ops.iter().enumerate() {
                if set.is_empty() {
                    return bad(format!("product {p} operation {o} has no eligible workstation"));
                }
                if let Some(ws) = set.iter().find(|&&w| w >= self.n_workstations) {
                    return bad(format!("product {p} operation {o} references workstation {ws}"));
                }
                let mut s = set.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != set.len() {
                    return bad(format!("product {p} operation {o} lists a workstation twice"));
                }
            }
        }
        let positive = [
            ("interarrival_mean", self.interarrival_mean),
            ("due_date.t_sd", self.due_date.t_sd),
            ("due_date.t_floor", self.due_date.t_floor),
            ("breakdown.tbi_mean", self.breakdown.tbi_mean),
            ("breakdown.trf_mean", self.breakdown.trf_mean),
            ("aiv.recharge_duration", self.aiv.recharge_duration),
            ("aiv.energy.not_moving", self.aiv.energy.not_moving),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, [lo, hi]) in [
            ("layout_range", self.layout_range),
            ("processing_time_range", self.processing_time_range),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) || lo.ceil() > hi.floor() {
                return bad(format!("{name} must be a positive interval containing an integer"));
            }
        }
        if self.aiv.count == 0 || self.aiv.capacity == 0 {
            return bad("need at least one vehicle with positive capacity".into());
        }
        if self.aiv.energy.moving.len() <= self.aiv.capacity {
            return bad(format!(
                "energy.moving needs a rate for every load 0..={}",
                self.aiv.capacity
            ));
        }
        if self.aiv.energy.moving.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("moving rates must be non-negative".into());
        }
        if !(0.0..=100.0).contains(&self.aiv.charge_threshold)
            || !(0.0..=100.0).contains(&self.aiv.initial_battery)
        {
            return bad("battery percentages must lie in [0, 100]".into());
        }
        // the scenario file stores seeds as TOML integers (i64)
        if self.seed > i64::MAX as u64 || self.layout_seed.is_some_and(|s| s > i64::MAX as u64) {
            return bad(format!("seeds must not exceed {}", i64::MAX));
        }
        if let Some(h) = self.breakdown.horizon {
            if !(h.is_finite() && h >= 0.0) {
                return bad("breakdown.horizon must be non-negative".into());
            }
        }
        Ok(())
    }
}
