//! Dispatching-rule baselines: one workstation rule crossed with one vehicle
//! rule. Ties go to the lowest id.

use std::fmt;
use std::str::FromStr;

use crate::model::{AivId, JobId, WsId};
use crate::sim::{Policy, SimError, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WsRule {
    /// Shortest processing time for this operation.
    Spt,
    /// Shortest queue.
    Sql,
    /// Lowest busy-time percentage.
    SwlW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AivRule {
    /// Most charge.
    Mc,
    /// Shortest transfer time to the pickup node.
    Stt,
    /// Lowest busy-time percentage.
    SwlA,
}

impl WsRule {
    pub fn label(self) -> &'static str {
        match self {
            WsRule::Spt => "SPT",
            WsRule::Sql => "SQL",
            WsRule::SwlW => "SWL_W",
        }
    }
}

impl AivRule {
    pub fn label(self) -> &'static str {
        match self {
            AivRule::Mc => "MC",
            AivRule::Stt => "STT",
            AivRule::SwlA => "SWL_A",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeuristicPolicy {
    pub ws_rule: WsRule,
    pub aiv_rule: AivRule,
}

impl HeuristicPolicy {
    pub const fn new(aiv_rule: AivRule, ws_rule: WsRule) -> Self {
        Self { ws_rule, aiv_rule }
    }

    /// The nine combinations in reporting order.
    pub const ALL: [HeuristicPolicy; 9] = [
        Self::new(AivRule::Stt, WsRule::Spt),
        Self::new(AivRule::Stt, WsRule::Sql),
        Self::new(AivRule::Stt, WsRule::SwlW),
        Self::new(AivRule::SwlA, WsRule::Spt),
        Self::new(AivRule::SwlA, WsRule::Sql),
        Self::new(AivRule::SwlA, WsRule::SwlW),
        Self::new(AivRule::Mc, WsRule::Spt),
        Self::new(AivRule::Mc, WsRule::Sql),
        Self::new(AivRule::Mc, WsRule::SwlW),
    ];

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|h| h.to_string()).collect()
    }
}

impl fmt::Display for HeuristicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.aiv_rule.label(), self.ws_rule.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPolicy(pub String);

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown policy {:?}; valid heuristics: {}",
            self.0,
            HeuristicPolicy::names().join(", ")
        )
    }
}

impl std::error::Error for UnknownPolicy {}

impl FromStr for HeuristicPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|h| h.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// Index of the smallest score; the first one wins ties. `None` if empty.
pub fn argmin_by_score<I: IntoIterator<Item = f64>>(scores: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_workstation(rule: WsRule, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
    let j = sim.job(job);
    let op = j
        .current_operation()
        .ok_or_else(|| SimError::InvalidTransition(format!("{job} has no pending operation")))?;
    // eligible sets are stored in ascending id order, so the first minimum is
    // the lowest id
    let mut cands: Vec<(WsId, f64)> = op
        .eligible
        .iter()
        .zip(&op.processing_time)
        .map(|(&w, &pt)| {
            let score = match rule {
                WsRule::Spt => pt,
                WsRule::Sql => sim.workstation(w).queue.len() as f64,
                WsRule::SwlW => sim.workstation(w).busy_fraction(sim.now()),
            };
            (w, score)
        })
        .collect();
    cands.sort_by_key(|c| c.0);
    let i = argmin_by_score(cands.iter().map(|c| c.1))
        .ok_or_else(|| SimError::InvalidTransition(format!("{job} has no eligible workstation")))?;
    Ok(cands[i].0)
}

pub fn select_aiv(rule: AivRule, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
    let pickup = sim
        .pickup_node(job)
        .ok_or_else(|| SimError::InvalidTransition(format!("{job} is not at a node")))?;
    let scores = sim.aivs().iter().map(|a| match rule {
        AivRule::Mc => -a.battery,
        AivRule::Stt => sim.distance(a.position(), pickup),
        AivRule::SwlA => a.busy_fraction(sim.now()),
    });
    argmin_by_score(scores)
        .map(AivId)
        .ok_or_else(|| SimError::InvalidTransition("no vehicles configured".into()))
}

impl Policy for HeuristicPolicy {
    fn name(&self) -> String {
        self.to_string()
    }

    fn select_workstation(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
        select_workstation(self.ws_rule, sim, job)
    }

    fn select_aiv(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
        select_aiv(self.aiv_rule, sim, job)
    }
}
