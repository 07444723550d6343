use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::neural::{self, Architecture, NeuralError};
use crate::rng::{SeededStreams, Stream};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};
use crate::sim::{run_policy, RunMetrics, Simulation};
use crate::LbccNet;

use super::controller::{Brain, DecisionKind, MadqnPolicy};
use super::observe::{aiv_obs_width, ws_obs_width, Normalizer};
use super::{MadqnError, ParamSharing, TrainConfig};

pub const CHECKPOINT_FORMAT: &str = "aivsched-madqn";
const CHECKPOINT_VERSION: u32 = 1;

/// Training instances use `base_seed + TRAIN_SEED_OFFSET + i`, disjoint from
/// evaluation replications at `base_seed + r`.
pub const TRAIN_SEED_OFFSET: u64 = 1_000_000;

/// Validation instances use `base_seed + VALIDATION_SEED_OFFSET + i`.
pub const VALIDATION_SEED_OFFSET: u64 = 2_000_000;

/// Parameters with the lowest mean validation tardiness seen so far. Greedy
/// rollouts use these when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSnapshot {
    /// Episodes completed when the snapshot was taken.
    pub episode: usize,
    pub mean_tardiness: f64,
    pub ws: Vec<LbccNet>,
    pub aiv: Vec<LbccNet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadqnCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    pub normalizer: Normalizer,
    pub n_workstations: usize,
    pub n_aivs: usize,
    pub episodes_done: usize,
    pub updates: [u64; 2],
    pub ws: Vec<LbccNet>,
    pub aiv: Vec<LbccNet>,
    pub ws_target: Vec<LbccNet>,
    pub aiv_target: Vec<LbccNet>,
    #[serde(default)]
    pub selected: Option<SelectedSnapshot>,
}

impl MadqnCheckpoint {
    /// Fresh networks sized for `reference`, whose horizon estimate also
    /// fixes the time normaliser.
    pub fn init(config: TrainConfig, reference: &Scenario) -> Result<Self, MadqnError> {
        config.validate()?;
        let m = reference.n_workstations();
        let n = reference.n_aivs();
        let copies = match config.sharing {
            ParamSharing::Shared => 1,
            ParamSharing::PerAgent => reference.n_jobs(),
        };
        let mut rng = SeededStreams::new(config.seed).stream(Stream::WeightInit);
        let mut make = |input, outputs| -> Result<Vec<LbccNet>, NeuralError> {
            let arch = Architecture { input, hidden: config.hidden.clone(), outputs, comm_slots: config.comm_slots };
            (0..copies).map(|_| LbccNet::new(arch.clone(), &mut rng)).collect()
        };
        let ws = make(ws_obs_width(m), m)?;
        let aiv = make(aiv_obs_width(n), n)?;
        Ok(Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            normalizer: Normalizer::for_scenario(reference, config.k),
            config,
            n_workstations: m,
            n_aivs: n,
            episodes_done: 0,
            updates: [0, 0],
            ws_target: ws.clone(),
            aiv_target: aiv.clone(),
            ws,
            aiv,
            selected: None,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MadqnError> {
        Ok(neural::save_json(self, path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MadqnError> {
        let c: Self = neural::load_json(path)?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), MadqnError> {
        let bad = |m: String| Err(MadqnError::Neural(NeuralError::Checkpoint(m)));
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return bad(format!("not a {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION} file"));
        }
        if self.ws.is_empty() || self.ws.len() != self.aiv.len() || self.ws.len() != self.ws_target.len() || self.aiv.len() != self.aiv_target.len() {
            return bad("network lists are inconsistent".into());
        }
        for net in self.ws.iter().chain(&self.aiv).chain(&self.ws_target).chain(&self.aiv_target) {
            net.validate()?;
            if !net.all_finite() {
                return bad("non-finite parameters".into());
            }
        }
        if let Some(sel) = &self.selected {
            if sel.ws.len() != self.ws.len() || sel.aiv.len() != self.aiv.len() {
                return bad("selected snapshot is inconsistent".into());
            }
            for (a, b) in sel.ws.iter().zip(&self.ws).chain(sel.aiv.iter().zip(&self.aiv)) {
                a.validate()?;
                if a.architecture() != b.architecture() || !a.all_finite() {
                    return bad("selected snapshot does not match the networks".into());
                }
            }
        }
        let ws_arch = self.ws[0].architecture();
        let aiv_arch = self.aiv[0].architecture();
        if ws_arch.outputs != self.n_workstations || ws_arch.input != ws_obs_width(self.n_workstations) {
            return bad("workstation network does not match the workstation count".into());
        }
        if aiv_arch.outputs != self.n_aivs || aiv_arch.input != aiv_obs_width(self.n_aivs) {
            return bad("vehicle network does not match the vehicle count".into());
        }
        Ok(())
    }

    pub fn check_fits(&self, s: &Scenario) -> Result<(), MadqnError> {
        if s.n_workstations() != self.n_workstations || s.n_aivs() != self.n_aivs {
            return Err(MadqnError::Mismatch(format!(
                "checkpoint has {} workstations / {} vehicles, scenario {} / {}",
                self.n_workstations,
                self.n_aivs,
                s.n_workstations(),
                s.n_aivs()
            )));
        }
        if self.ws.len() > 1 && s.n_jobs() > self.ws.len() {
            return Err(MadqnError::Mismatch(format!(
                "per-agent checkpoint covers {} jobs, scenario has {}",
                self.ws.len(),
                s.n_jobs()
            )));
        }
        Ok(())
    }

    /// Learning controller over the current parameters, or greedy controller
    /// over the selected snapshot (falling back to the current parameters).
    pub fn policy(&self, learning: bool) -> MadqnPolicy {
        match (&self.selected, learning) {
            (Some(sel), false) => self.controller(&sel.ws, &sel.aiv, false),
            _ => self.controller(&self.ws, &self.aiv, learning),
        }
    }

    fn controller(&self, ws: &[LbccNet], aiv: &[LbccNet], learning: bool) -> MadqnPolicy {
        let cap = self.config.replay_capacity;
        let mut ws = Brain::new(ws.to_vec(), self.ws_target.clone(), cap);
        let mut aiv = Brain::new(aiv.to_vec(), self.aiv_target.clone(), cap);
        ws.updates = self.updates[0];
        aiv.updates = self.updates[1];
        let rng = SeededStreams::new(self.config.seed).stream(Stream::Exploration);
        MadqnPolicy::new(self.config.clone(), self.normalizer, ws, aiv, learning, rng)
    }

    /// Mean greedy tardiness of the current parameters over `scenarios`.
    fn validation_score(&self, scenarios: &[Scenario]) -> Result<f64, MadqnError> {
        let mut total = 0.0;
        for s in scenarios {
            let mut policy = self.controller(&self.ws, &self.aiv, false);
            total += greedy_rollout(&mut policy, &mut Simulation::new(s))?.total_tardiness;
        }
        Ok(total / scenarios.len() as f64)
    }

    fn absorb(&mut self, policy: &MadqnPolicy) {
        let [ws, aiv] = policy.brains();
        self.ws = ws.online.clone();
        self.ws_target = ws.target.clone();
        self.aiv = aiv.online.clone();
        self.aiv_target = aiv.target.clone();
        self.updates = [ws.updates, aiv.updates];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub episode: usize,
    pub epsilon: f64,
    pub mean_loss_ws: f64,
    pub mean_loss_aiv: f64,
    pub total_tardiness: f64,
    pub n_tardy: usize,
    pub energy_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    /// Episodes completed at the time of the rollout.
    pub episode: usize,
    pub mean_tardiness: f64,
    /// Whether this rollout replaced the selected snapshot.
    pub selected: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: MadqnCheckpoint,
    pub log: Vec<LogRow>,
    pub validations: Vec<Validation>,
    pub decisions: usize,
    pub infeasible: usize,
}

fn offset_scenarios(base: &ScenarioConfig, offset: u64, count: usize) -> Result<Vec<Scenario>, MadqnError> {
    let layout_seed = base.layout_seed.unwrap_or(base.seed);
    (0..count as u64)
        .map(|i| {
            let mut c = base.clone();
            c.seed = base.seed.wrapping_add(offset + i) & (i64::MAX as u64);
            c.layout_seed = Some(layout_seed);
            Ok(generate_scenario(&c)?)
        })
        .collect()
}

/// `count` training instances drawn from `base` with seeds offset by
/// [`TRAIN_SEED_OFFSET`]. The layout stays pinned to the base layout seed.
pub fn training_scenarios(base: &ScenarioConfig, count: usize) -> Result<Vec<Scenario>, MadqnError> {
    offset_scenarios(base, TRAIN_SEED_OFFSET, count)
}

/// Held-out instances for snapshot selection, seeds offset by
/// [`VALIDATION_SEED_OFFSET`], same layout as training.
pub fn validation_scenarios(base: &ScenarioConfig, count: usize) -> Result<Vec<Scenario>, MadqnError> {
    offset_scenarios(base, VALIDATION_SEED_OFFSET, count)
}

/// Runs `episodes` more episodes starting from `init`. Episode `e` plays
/// `scenarios[e % len]`, so a resumed run picks up where the first one
/// stopped when given the same list. The epsilon schedule spans `max(config.episodes, done +
/// episodes)` episodes, so a resumed run continues the same schedule.
///
/// Every `validation_interval` episodes, and after the last one, the greedy
/// policy is scored on `validation`; the best-scoring parameters become the
/// checkpoint's selected snapshot. An empty `validation` disables this.
pub fn train(
    scenarios: &[Scenario],
    validation: &[Scenario],
    init: MadqnCheckpoint,
    episodes: usize,
    mut on_episode: impl FnMut(&LogRow),
) -> Result<TrainOutcome, MadqnError> {
    if scenarios.is_empty() {
        return Err(MadqnError::Config("no training scenarios".into()));
    }
    init.config.validate()?;
    for s in scenarios.iter().chain(validation) {
        init.check_fits(s)?;
    }
    let mut ckpt = init;
    let start = ckpt.episodes_done;
    let planned = ckpt.config.episodes.max(start + episodes);
    let streams = SeededStreams::new(ckpt.config.seed);
    let mut policy = ckpt.policy(true);
    let mut log = Vec::with_capacity(episodes);
    let mut validations = Vec::new();
    let interval = ckpt.config.validation_interval;
    let (mut decisions, mut infeasible) = (0, 0);

    for e in start..start + episodes {
        let s = &scenarios[e % scenarios.len()];
        let eps = ckpt.config.epsilon(e, planned);
        policy.begin_episode(s.n_jobs(), eps, streams.named(&format!("exploration-{e}")));
        let mut sim = Simulation::new(s);
        let result = run_policy(&mut sim, &mut policy);
        decisions += policy.stats().decisions;
        infeasible += policy.stats().infeasible;
        let metrics = match result {
            Ok(m) => m,
            Err(err) => {
                if let Some(reason) = policy.diverged() {
                    return Err(MadqnError::Divergence {
                        episode: e,
                        reason: reason.to_string(),
                        last_finite: Box::new(ckpt),
                    });
                }
                return Err(err.into());
            }
        };
        ckpt.absorb(&policy);
        ckpt.episodes_done = e + 1;
        let row = LogRow {
            episode: e,
            epsilon: eps,
            mean_loss_ws: policy.stats().mean_loss(DecisionKind::Workstation),
            mean_loss_aiv: policy.stats().mean_loss(DecisionKind::Vehicle),
            total_tardiness: metrics.total_tardiness,
            n_tardy: metrics.n_tardy,
            energy_pct: metrics.total_energy,
        };
        on_episode(&row);
        log.push(row);

        let done = e + 1;
        if interval > 0 && !validation.is_empty() && (done % interval == 0 || done == start + episodes) {
            let score = ckpt.validation_score(validation)?;
            let better = ckpt.selected.as_ref().is_none_or(|s| score < s.mean_tardiness);
            if better {
                ckpt.selected = Some(SelectedSnapshot {
                    episode: done,
                    mean_tardiness: score,
                    ws: ckpt.ws.clone(),
                    aiv: ckpt.aiv.clone(),
                });
            }
            validations.push(Validation { episode: done, mean_tardiness: score, selected: better });
        }
    }
    Ok(TrainOutcome { checkpoint: ckpt, log, validations, decisions, infeasible })
}

/// Greedy rollout of the selected snapshot, or of the current parameters
/// when nothing has been selected.
pub fn evaluate(ckpt: &MadqnCheckpoint, scenario: &Scenario) -> Result<RunMetrics, MadqnError> {
    evaluate_in(ckpt, &mut Simulation::new(scenario))
}

/// As [`evaluate`], on a caller-built simulation (for example one that
/// records a trace).
pub fn evaluate_in(ckpt: &MadqnCheckpoint, sim: &mut Simulation<'_>) -> Result<RunMetrics, MadqnError> {
    ckpt.check_fits(sim.scenario())?;
    greedy_rollout(&mut ckpt.policy(false), sim)
}

fn greedy_rollout(policy: &mut MadqnPolicy, sim: &mut Simulation<'_>) -> Result<RunMetrics, MadqnError> {
    let s = sim.scenario();
    policy.begin_episode(s.n_jobs(), 0.0, SeededStreams::new(s.seed).stream(Stream::Exploration));
    let m = run_policy(sim, &mut *policy)?;
    if policy.stats().infeasible > 0 {
        return Err(MadqnError::Config("infeasible selection during evaluation".into()));
    }
    Ok(m)
}

pub fn write_log_csv(rows: &[LogRow], path: impl AsRef<Path>) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}
