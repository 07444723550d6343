//! Multi-agent DQN scheduler. Every job is an agent with two decisions per
//! operation (workstation, then vehicle), each answered by its own Q-network.
//! By default all agents share one network per decision type; the hidden
//! layers exchange activations through the communication channel.

mod action;
mod controller;
mod observe;
mod replay;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{argmax, mask_q_values, select_action};
pub use controller::{DecisionKind, MadqnPolicy};
pub use observe::{aiv_obs_width, build_aiv_observation, build_ws_observation, ws_obs_width, Normalizer};
pub use replay::{Experience, ReplayBuffer};
pub use train::{
    evaluate, evaluate_in, train, training_scenarios, validation_scenarios, write_log_csv, LogRow, MadqnCheckpoint,
    SelectedSnapshot, TrainOutcome, Validation, CHECKPOINT_FORMAT, TRAIN_SEED_OFFSET, VALIDATION_SEED_OFFSET,
};

use crate::neural::NeuralError;
use crate::scenario::ScenarioError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum MadqnError {
    #[error("empty feasible set")]
    EmptyFeasibleSet,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training diverged at episode {episode}: {reason}")]
    Divergence {
        episode: usize,
        reason: String,
        /// State before the failing episode started.
        last_finite: Box<MadqnCheckpoint>,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("checkpoint does not fit the scenario: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSharing {
    /// One network per decision type for all agents.
    Shared,
    /// One network per decision type and job index.
    PerAgent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the planned episodes over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    pub batch_size: usize,
    /// SGD updates between target-network copies.
    pub target_sync: usize,
    pub replay_capacity: usize,
    pub gamma: f64,
    pub lr: f64,
    pub comm_slots: usize,
    pub hidden: Vec<usize>,
    /// Transfer allowance in the current-tardiness reward.
    pub k: f64,
    pub sharing: ParamSharing,
    /// Multiplier for time-valued rewards (tardiness, lateness).
    pub reward_time_scale: f64,
    /// Multiplier for the battery-percentage transfer reward.
    pub reward_energy_scale: f64,
    pub seed: u64,
    /// Episodes between greedy validation rollouts; 0 disables snapshot
    /// selection.
    pub validation_interval: usize,
    /// Held-out instances per validation rollout.
    pub validation_scenarios: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 500,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.8,
            batch_size: 32,
            target_sync: 100,
            replay_capacity: 10_000,
            gamma: 0.9,
            lr: 0.01,
            comm_slots: 8,
            hidden: vec![10; 5],
            k: 1.5,
            sharing: ParamSharing::Shared,
            reward_time_scale: 0.01,
            reward_energy_scale: 0.1,
            seed: 0,
            validation_interval: 25,
            validation_scenarios: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MadqnError> {
        let bad = |m: &str| Err(MadqnError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.eps_decay_fraction > 0.0 && self.eps_decay_fraction <= 1.0) {
            return bad("eps_decay_fraction must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.replay_capacity == 0 {
            return bad("batch size, sync period and replay capacity must be positive");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay capacity must hold at least one batch");
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) || !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("gamma must lie in [0, 1] and lr must be finite and non-negative");
        }
        if !(self.k > 0.0) || self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("k must be positive and hidden layers non-empty");
        }
        if !(self.reward_time_scale > 0.0 && self.reward_time_scale.is_finite())
            || !(self.reward_energy_scale > 0.0 && self.reward_energy_scale.is_finite())
        {
            return bad("reward scales must be positive");
        }
        Ok(())
    }

    /// Linear decay from `eps_start` to `eps_end` over the first
    /// `eps_decay_fraction` of `planned` episodes.
    pub fn epsilon(&self, episode: usize, planned: usize) -> f64 {
        let horizon = (self.eps_decay_fraction * planned as f64).max(1.0);
        let frac = (episode as f64 / horizon).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}
