//! Whole-run checks shared by the crate tests and the acceptance binary.

use aivsched::heuristics::HeuristicPolicy;
use aivsched::madqn::ws_obs_width;
use aivsched::neural::{mse_loss, Architecture, CommBundle, Gradients};
use aivsched::scenario::{generate_scenario, ScenarioConfig};
use aivsched::sim::{run_policy, Simulation};
use aivsched::LbccNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{random_comm, random_vec};

pub const ENERGY_TOL: f64 = 1e-9;
pub const ENERGY_SEEDS: u64 = 6;

/// Every heuristic on `ENERGY_SEEDS` generated shops of 40 jobs; odd seeds use
/// a charge threshold high enough to force recharges. Returns the number of
/// runs and the largest residual seen.
pub fn energy_conservation() -> Result<(usize, f64), String> {
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..ENERGY_SEEDS {
        let mut cfg = ScenarioConfig::case_study(40).with_seed(seed);
        cfg.aiv.charge_threshold = if seed % 2 == 0 { 40.0 } else { 97.0 };
        let s = generate_scenario(&cfg).map_err(|e| e.to_string())?;
        for h in HeuristicPolicy::ALL {
            let mut sim = Simulation::new(&s);
            let mut p = h;
            let m = run_policy(&mut sim, &mut p).map_err(|e| e.to_string())?;
            let ledger = sim.ledger();
            for a in 0..s.n_aivs() {
                let residual = ledger.conservation_residual(a, sim.aivs()[a].battery).abs();
                worst = worst.max(residual);
                if residual > ENERGY_TOL {
                    return Err(format!("seed {seed} {h} A{}: residual {residual}", a + 1));
                }
                if !ledger.is_contiguous(a) {
                    return Err(format!("seed {seed} {h} A{}: ledger has gaps", a + 1));
                }
            }
            if (ledger.total_all() - m.total_energy).abs() > ENERGY_TOL {
                return Err(format!("seed {seed} {h}: ledger {} vs reported {}", ledger.total_all(), m.total_energy));
            }
            if seed % 2 == 1 && m.recharges == 0 {
                return Err(format!("seed {seed} {h}: expected recharges"));
            }
            runs += 1;
        }
    }
    Ok((runs, worst))
}

pub const DQN_STEPS: usize = 100;
pub const DQN_LR: f64 = 0.01;
pub const DQN_GAMMA: f64 = 0.9;
pub const DQN_BATCH: usize = 32;
pub const DQN_REQUIRED_DROP: f64 = 0.5;

struct Sample {
    x: Vec<f64>,
    comm: CommBundle<f64>,
    action: usize,
    target: f64,
}

fn td_loss(net: &LbccNet, batch: &[Sample]) -> f64 {
    let (pred, target): (Vec<f64>, Vec<f64>) =
        batch.iter().map(|s| (net.predict(&s.x, &s.comm).unwrap()[s.action], s.target)).unzip();
    mse_loss(&pred, &target)
}

/// Full-batch SGD on a fixed batch of one-step targets from a frozen target
/// network. Returns the loss before and after.
pub fn dqn_sanity(seed: u64) -> (f64, f64) {
    let arch = Architecture::standard(ws_obs_width(5), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut online = LbccNet::new(arch.clone(), &mut rng).unwrap();
    let target_net = LbccNet::new(arch.clone(), &mut rng).unwrap();
    let batch: Vec<Sample> = (0..DQN_BATCH)
        .map(|_| {
            let x = random_vec(&mut rng, arch.input, 0.0, 1.0);
            let comm = random_comm(&mut rng, &arch);
            let next = random_vec(&mut rng, arch.input, 0.0, 1.0);
            let reward = rng.random_range(-1.0..0.0);
            let best = target_net.predict(&next, &comm).unwrap().into_iter().fold(f64::NEG_INFINITY, f64::max);
            Sample { x, comm, action: rng.random_range(0..arch.outputs), target: reward + DQN_GAMMA * best }
        })
        .collect();

    let before = td_loss(&online, &batch);
    for _ in 0..DQN_STEPS {
        let mut grads = Gradients::zeros_like(&online);
        for s in &batch {
            let (out, trace) = online.forward(&s.x, &s.comm).unwrap();
            let mut d = vec![0.0; arch.outputs];
            d[s.action] = 2.0 * (out[s.action] - s.target) / batch.len() as f64;
            grads.add_assign(&online.backward(&trace, &d).unwrap());
        }
        online.sgd_step(&grads, DQN_LR).unwrap();
    }
    (before, td_loss(&online, &batch))
}
