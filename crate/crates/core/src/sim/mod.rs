//! Discrete-event engine.
//!
//! Events are ordered by `(time, class, insertion)` where the class puts
//! completions first, then repairs, breakdowns, arrivals and finally
//! decisions. A [`Policy`] answers two questions per operation: which
//! workstation, then which vehicle.

mod energy;
mod engine;
mod event;
mod state;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AivId, JobId, Time, WsId};

pub use energy::{EnergyLedger, LedgerEntry, LoadClass};
pub use engine::{Assignment, EventOutcome, Simulation};
pub use event::{Event, EventKind, EventQueue};
pub use state::{
    Aiv, AivStatus, ChargingStation, Job, JobLocation, JobStatus, Leg, Operation, TransportRequest,
    Workstation,
};
pub use trace::{trace_to_string, write_trace, TraceRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("infeasible action: {0}")]
    InfeasibleAction(String),
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal corruption: {0}")]
    Corruption(String),
    #[error("no events left at t={time} with {completed}/{total} jobs completed")]
    Stalled { time: Time, completed: usize, total: usize },
    #[error("policy failure: {0}")]
    Policy(String),
}

/// Things a policy may want to learn from, emitted as they happen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Notice {
    /// `op` is the 0-based index of the operation that just finished.
    OperationCompleted { job: JobId, op: usize, time: Time },
    /// Transfer window from pickup commencement to delivery.
    TransferCompleted { job: JobId, aiv: AivId, start: Time, end: Time },
    JobCompleted { job: JobId, time: Time },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostic {
    BatteryDepleted { aiv: AivId, time: Time },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_tardiness: f64,
    pub n_tardy: usize,
    /// Battery percentage consumed by all vehicles.
    pub total_energy: f64,
    pub makespan: Time,
    pub completed: usize,
    pub recharges: usize,
    pub depleted: bool,
}

pub trait Policy {
    fn name(&self) -> String;

    fn select_workstation(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError>;

    /// Called only when the job must be moved to the chosen workstation.
    fn select_aiv(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError>;

    fn observe(&mut self, _sim: &Simulation<'_>, _notice: &Notice) {}
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn name(&self) -> String {
        (**self).name()
    }
    fn select_workstation(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
        (**self).select_workstation(sim, job)
    }
    fn select_aiv(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
        (**self).select_aiv(sim, job)
    }
    fn observe(&mut self, sim: &Simulation<'_>, notice: &Notice) {
        (**self).observe(sim, notice)
    }
}

/// Resolves one decision point: workstation first, then a vehicle if the job
/// has to move.
pub fn decide<P: Policy + ?Sized>(
    sim: &mut Simulation<'_>,
    policy: &mut P,
    job: JobId,
) -> Result<(), SimError> {
    let ws = policy.select_workstation(sim, job)?;
    if sim.assign_workstation(job, ws)? == Assignment::NeedsTransport {
        let aiv = policy.select_aiv(sim, job)?;
        sim.enqueue_transport(job, aiv)?;
    }
    Ok(())
}

fn flush_notices<P: Policy + ?Sized>(sim: &mut Simulation<'_>, policy: &mut P) {
    let notices: Vec<Notice> = sim.drain_notices().collect();
    for n in &notices {
        policy.observe(sim, n);
    }
}

/// Runs the simulation to completion under `policy`.
pub fn run_policy<P: Policy + ?Sized>(
    sim: &mut Simulation<'_>,
    policy: &mut P,
) -> Result<RunMetrics, SimError> {
    loop {
        match sim.advance_to_next_event()? {
            EventOutcome::Complete => break,
            EventOutcome::Decision(job) => decide(sim, policy, job)?,
            EventOutcome::Applied(_) => {}
        }
        flush_notices(sim, policy);
    }
    flush_notices(sim, policy);
    Ok(sim.metrics())
}

/// Replays fixed choices in decision order. Useful for oracles and for
/// reproducing a recorded run.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    pub workstations: std::collections::VecDeque<WsId>,
    pub aivs: std::collections::VecDeque<AivId>,
}

impl ScriptedPolicy {
    pub fn new(workstations: impl IntoIterator<Item = WsId>, aivs: impl IntoIterator<Item = AivId>) -> Self {
        Self { workstations: workstations.into_iter().collect(), aivs: aivs.into_iter().collect() }
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn select_workstation(&mut self, _sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
        self.workstations
            .pop_front()
            .ok_or_else(|| SimError::Policy(format!("script has no workstation for {job}")))
    }

    fn select_aiv(&mut self, _sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
        self.aivs
            .pop_front()
            .ok_or_else(|| SimError::Policy(format!("script has no vehicle for {job}")))
    }
}

#[cfg(test)]
mod tests;
