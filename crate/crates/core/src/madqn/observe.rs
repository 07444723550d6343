//! Observation vectors. Fixed divisors keep the mapping stationary across
//! episodes; every entry is clamped to `[0, 1]`.
//!
//! Workstation network, `4m + 3` entries:
//! queue lengths, distances from the job, busy fractions, processing time of
//! the job's next operation on each workstation (0 where ineligible), then
//! current tardiness, remaining processing time and the clock.
//!
//! Vehicle network, `3n + 3` entries:
//! queue lengths, distances to the job's pickup node, battery fractions, then
//! the same three job scalars.

use serde::{Deserialize, Serialize};

use crate::formulas;
use crate::model::JobId;
use crate::scenario::Scenario;
use crate::sim::Simulation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub queue_div: f64,
    pub distance_div: f64,
    pub time_div: f64,
    /// Transfer allowance in current tardiness.
    pub k: f64,
}

impl Normalizer {
    /// Queue lengths over the job count, distances over the upper layout
    /// bound, times over the horizon estimate.
    pub fn for_scenario(s: &Scenario, k: f64) -> Self {
        Self {
            queue_div: s.n_jobs().max(1) as f64,
            distance_div: s.config.layout_range[1],
            time_div: s.horizon_estimate(),
            k,
        }
    }
}

pub fn ws_obs_width(n_workstations: usize) -> usize {
    4 * n_workstations + 3
}

pub fn aiv_obs_width(n_aivs: usize) -> usize {
    3 * n_aivs + 3
}

fn unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Current tardiness, remaining mean processing time and clock, normalised.
fn job_scalars(sim: &Simulation<'_>, job: JobId, norm: &Normalizer) -> [f64; 3] {
    let j = sim.job(job);
    let rpt = j.remaining_mean_time();
    let now = sim.now();
    let ct = formulas::current_tardiness(norm.k, rpt, now, j.due_date);
    [unit(ct / norm.time_div), unit(rpt / norm.time_div), unit(now / norm.time_div)]
}

pub fn build_ws_observation(sim: &Simulation<'_>, job: JobId, norm: &Normalizer) -> Vec<f64> {
    let s = sim.scenario();
    let m = s.n_workstations();
    let j = sim.job(job);
    let here = j.node().unwrap_or(s.layout.storage());
    let now = sim.now();
    let mut out = Vec::with_capacity(ws_obs_width(m));
    out.extend(sim.workstations().iter().map(|w| unit(w.queue.len() as f64 / norm.queue_div)));
    out.extend(
        sim.workstations()
            .iter()
            .map(|w| unit(s.layout.distance(here, s.layout.ws_node(w.id)) / norm.distance_div)),
    );
    out.extend(sim.workstations().iter().map(|w| unit(w.busy_fraction(now))));
    let op = j.current_operation();
    out.extend(sim.workstations().iter().map(|w| {
        op.and_then(|o| o.time_on(w.id)).map_or(0.0, |t| unit(t / norm.time_div))
    }));
    out.extend(job_scalars(sim, job, norm));
    out
}

pub fn build_aiv_observation(sim: &Simulation<'_>, job: JobId, norm: &Normalizer) -> Vec<f64> {
    let s = sim.scenario();
    let here = sim.pickup_node(job).unwrap_or(s.layout.storage());
    let mut out = Vec::with_capacity(aiv_obs_width(sim.aivs().len()));
    out.extend(sim.aivs().iter().map(|a| unit(a.queue_len() as f64 / norm.queue_div)));
    out.extend(
        sim.aivs()
            .iter()
            .map(|a| unit(s.layout.distance(a.position(), here) / norm.distance_div)),
    );
    out.extend(sim.aivs().iter().map(|a| unit(a.battery / 100.0)));
    out.extend(job_scalars(sim, job, norm));
    out
}
