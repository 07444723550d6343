use crate::formulas;
use crate::model::{AivId, JobId, WsId};
use crate::neural::CommBundle;
use crate::rng::StreamRng;
use crate::sim::{Notice, Policy, SimError, Simulation};
use crate::LbccNet;

use super::action::{mask_q_values, select_action};
use super::observe::{build_aiv_observation, build_ws_observation, Normalizer};
use super::replay::{Experience, NextState, ReplayBuffer};
use super::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    Workstation,
    Vehicle,
}

impl DecisionKind {
    fn slot(self) -> usize {
        match self {
            DecisionKind::Workstation => 0,
            DecisionKind::Vehicle => 1,
        }
    }
}

/// Online and target networks plus replay for one decision type.
#[derive(Debug, Clone)]
pub(crate) struct Brain {
    pub online: Vec<LbccNet>,
    pub target: Vec<LbccNet>,
    pub buffers: Vec<ReplayBuffer>,
    pub updates: u64,
}

impl Brain {
    pub fn new(online: Vec<LbccNet>, target: Vec<LbccNet>, capacity: usize) -> Self {
        let buffers = (0..online.len()).map(|_| ReplayBuffer::new(capacity)).collect();
        Self { online, target, buffers, updates: 0 }
    }

    fn index(&self, job: JobId) -> usize {
        if self.online.len() == 1 {
            0
        } else {
            job.0
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    obs: Vec<f64>,
    comm: CommBundle<f64>,
    action: usize,
    mask: Vec<bool>,
    reward: f64,
}

#[derive(Debug, Clone, Default)]
struct AgentState {
    /// Hidden activations of the agent's latest forward pass, per type.
    hidden: [Option<Vec<Vec<f64>>>; 2],
    activity: [u64; 2],
    pending: [Option<Pending>; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeStats {
    pub decisions: usize,
    /// Selections outside the feasible set; must stay zero.
    pub infeasible: usize,
    pub losses: [Vec<f64>; 2],
}

impl EpisodeStats {
    pub fn mean_loss(&self, kind: DecisionKind) -> f64 {
        let l = &self.losses[kind.slot()];
        if l.is_empty() {
            f64::NAN
        } else {
            l.iter().sum::<f64>() / l.len() as f64
        }
    }
}

/// Scheduler driven by the two Q-networks. In learning mode it also stores
/// transitions and takes one SGD step per decision.
pub struct MadqnPolicy {
    config: TrainConfig,
    norm: Normalizer,
    brains: [Brain; 2],
    learning: bool,
    epsilon: f64,
    rng: StreamRng,
    agents: Vec<AgentState>,
    tick: u64,
    stats: EpisodeStats,
    diverged: Option<String>,
}

impl MadqnPolicy {
    pub(crate) fn new(
        config: TrainConfig,
        norm: Normalizer,
        ws: Brain,
        aiv: Brain,
        learning: bool,
        rng: StreamRng,
    ) -> Self {
        Self {
            config,
            norm,
            brains: [ws, aiv],
            learning,
            epsilon: 0.0,
            rng,
            agents: Vec::new(),
            tick: 0,
            stats: EpisodeStats::default(),
            diverged: None,
        }
    }

    /// Clears per-episode agent state. Replay and parameters persist.
    pub fn begin_episode(&mut self, n_jobs: usize, epsilon: f64, rng: StreamRng) {
        self.agents = vec![AgentState::default(); n_jobs];
        self.epsilon = epsilon;
        self.rng = rng;
        self.tick = 0;
        self.stats = EpisodeStats::default();
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    pub fn diverged(&self) -> Option<&str> {
        self.diverged.as_deref()
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.norm
    }

    pub(crate) fn brains(&self) -> &[Brain; 2] {
        &self.brains
    }

    pub fn updates(&self, kind: DecisionKind) -> u64 {
        self.brains[kind.slot()].updates
    }

    pub fn replay_len(&self, kind: DecisionKind) -> usize {
        self.brains[kind.slot()].buffers.iter().map(ReplayBuffer::len).sum()
    }

    pub fn replay(&self, kind: DecisionKind) -> impl Iterator<Item = &Experience> {
        self.brains[kind.slot()].buffers.iter().flat_map(|b| b.iter())
    }

    /// Peers: other active agents with a stored activation for this decision
    /// type, most recent first.
    fn peer_comm(&self, kind: DecisionKind, sim: &Simulation<'_>, job: JobId) -> Result<CommBundle<f64>, SimError> {
        let k = kind.slot();
        let brain = &self.brains[k];
        let arch = brain.online[brain.index(job)].architecture();
        let mut peers: Vec<(u64, &[Vec<f64>])> = self
            .agents
            .iter()
            .enumerate()
            .filter(|&(j, a)| j != job.0 && a.hidden[k].is_some() && sim.job(JobId(j)).is_active())
            .map(|(_, a)| (a.activity[k], a.hidden[k].as_deref().unwrap_or(&[])))
            .collect();
        peers.sort_by(|a, b| b.0.cmp(&a.0));
        CommBundle::from_peers(arch, peers.into_iter().map(|p| p.1))
            .map_err(|e| SimError::Policy(e.to_string()))
    }

    fn decide(
        &mut self,
        kind: DecisionKind,
        sim: &Simulation<'_>,
        job: JobId,
        obs: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<usize, SimError> {
        if job.0 >= self.agents.len() {
            return Err(SimError::Policy(format!("{job} has no agent; call begin_episode first")));
        }
        let k = kind.slot();
        let comm = self.peer_comm(kind, sim, job)?;
        let idx = self.brains[k].index(job);
        let (q, trace) = self.brains[k].online[idx]
            .forward(&obs, &comm)
            .map_err(|e| SimError::Policy(e.to_string()))?;
        self.tick += 1;
        let agent = &mut self.agents[job.0];
        agent.hidden[k] = Some(trace.hidden);
        agent.activity[k] = self.tick;

        if self.learning {
            if let Some(p) = agent.pending[k].take() {
                let next = NextState { obs: obs.clone(), comm: comm.clone(), mask: mask.clone() };
                self.store(kind, idx, p, Some(next));
            }
            self.train_step(kind, idx)?;
        }

        let masked = mask_q_values(&q, &mask).map_err(|e| SimError::Policy(e.to_string()))?;
        let a = select_action(&masked, &mask, self.epsilon, &mut self.rng)
            .map_err(|e| SimError::Policy(e.to_string()))?;
        self.stats.decisions += 1;
        if !mask[a] {
            self.stats.infeasible += 1;
            return Err(SimError::InfeasibleAction(format!("network chose masked action {a} for {job}")));
        }
        if self.learning {
            self.agents[job.0].pending[k] = Some(Pending { obs, comm, action: a, mask, reward: 0.0 });
        }
        Ok(a)
    }

    fn store(&mut self, kind: DecisionKind, idx: usize, p: Pending, next: Option<NextState>) {
        self.brains[kind.slot()].buffers[idx].push(Experience {
            obs: p.obs,
            comm: p.comm,
            action: p.action,
            mask: p.mask,
            reward: p.reward,
            next,
        });
    }

    fn train_step(&mut self, kind: DecisionKind, idx: usize) -> Result<(), SimError> {
        let cfg = &self.config;
        let brain = &mut self.brains[kind.slot()];
        if brain.buffers[idx].len() < cfg.batch_size {
            return Ok(());
        }
        let batch = brain.buffers[idx].sample(cfg.batch_size, &mut self.rng);
        let online = &brain.online[idx];
        let target = &brain.target[idx];
        let n = batch.len() as f64;
        let mut grads = crate::Grads::zeros_like(online);
        let mut loss = 0.0;
        for e in &batch {
            let (q, trace) = online.forward(&e.obs, &e.comm).map_err(|e| SimError::Policy(e.to_string()))?;
            let y = match &e.next {
                None => e.reward,
                Some(next) => {
                    let qn = target.predict(&next.obs, &next.comm).map_err(|e| SimError::Policy(e.to_string()))?;
                    let qn = mask_q_values(&qn, &next.mask).map_err(|e| SimError::Policy(e.to_string()))?;
                    formulas::td_target(e.reward, &qn, cfg.gamma, false)
                }
            };
            let diff = q[e.action] - y;
            loss += diff * diff;
            let mut d = vec![0.0; q.len()];
            d[e.action] = 2.0 * diff / n;
            let g = online.backward(&trace, &d).map_err(|e| SimError::Policy(e.to_string()))?;
            grads.add_assign(&g);
        }
        loss /= n;
        let lr = cfg.lr;
        let sync = cfg.target_sync as u64;
        if !loss.is_finite() {
            let msg = format!("non-finite {kind:?} loss after {} updates", brain.updates);
            self.diverged = Some(msg.clone());
            return Err(SimError::Policy(msg));
        }
        if let Err(e) = brain.online[idx].sgd_step(&grads, lr) {
            let msg = e.to_string();
            self.diverged = Some(msg.clone());
            return Err(SimError::Policy(msg));
        }
        brain.updates += 1;
        if brain.updates % sync == 0 {
            brain.target[idx] = brain.online[idx].clone();
        }
        self.stats.losses[kind.slot()].push(loss);
        Ok(())
    }

    fn add_reward(&mut self, job: JobId, kind: DecisionKind, r: f64) {
        if let Some(p) = self.agents.get_mut(job.0).and_then(|a| a.pending[kind.slot()].as_mut()) {
            p.reward += r;
        }
    }
}

impl Policy for MadqnPolicy {
    fn name(&self) -> String {
        "MADQN".into()
    }

    fn select_workstation(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
        let obs = build_ws_observation(sim, job, &self.norm);
        let op = sim
            .job(job)
            .current_operation()
            .ok_or_else(|| SimError::InvalidTransition(format!("{job} has no pending operation")))?;
        let mask: Vec<bool> = (0..sim.workstations().len()).map(|w| op.time_on(WsId(w)).is_some()).collect();
        self.decide(DecisionKind::Workstation, sim, job, obs, mask).map(WsId)
    }

    fn select_aiv(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
        let obs = build_aiv_observation(sim, job, &self.norm);
        let mask = vec![true; sim.aivs().len()];
        self.decide(DecisionKind::Vehicle, sim, job, obs, mask).map(AivId)
    }

    fn observe(&mut self, sim: &Simulation<'_>, notice: &Notice) {
        if !self.learning {
            return;
        }
        let ts = self.config.reward_time_scale;
        match *notice {
            Notice::OperationCompleted { job, time, .. } => {
                let j = sim.job(job);
                let ct = formulas::current_tardiness(self.norm.k, j.remaining_mean_time(), time, j.due_date);
                self.add_reward(job, DecisionKind::Workstation, -ts * ct);
            }
            Notice::TransferCompleted { job, aiv, start, end } => {
                let used = sim.ledger().consumed_between(aiv.0, start, end);
                let r = -self.config.reward_energy_scale * used;
                self.add_reward(job, DecisionKind::Vehicle, r);
            }
            Notice::JobCompleted { job, time } => {
                let fin = ts * formulas::final_reward(time, sim.job(job).due_date);
                for kind in [DecisionKind::Workstation, DecisionKind::Vehicle] {
                    let k = kind.slot();
                    let idx = self.brains[k].index(job);
                    if let Some(mut p) = self.agents.get_mut(job.0).and_then(|a| a.pending[k].take()) {
                        p.reward += fin;
                        self.store(kind, idx, p, None);
                    }
                }
            }
        }
    }
}
