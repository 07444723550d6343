use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::{Scenario, ScenarioConfig, ScenarioError};
use crate::formulas;
use crate::model::{Downtime, JobId, JobSpec, Layout, OperationSpec, Product, WsId};
use crate::rng::{SeededStreams, Stream, StreamRng};

/// Draws a complete instance from `config`. Pure in `(config, seed)`.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    config.validate()?;
    let streams = SeededStreams::new(config.seed);
    let layout_streams = SeededStreams::new(config.layout_seed.unwrap_or(config.seed));

    let layout = draw_layout(config, &mut layout_streams.stream(Stream::Layout));
    let products = draw_products(config, &mut streams.stream(Stream::ProcessingTimes));
    let jobs = draw_jobs(config, &products, &streams)?;

    let mut scenario = Scenario {
        seed: config.seed,
        config: config.clone(),
        layout,
        products,
        jobs,
        breakdowns: vec![Vec::new(); config.n_workstations],
    };
    if config.breakdown.enabled {
        let horizon = config
            .breakdown
            .horizon
            .unwrap_or_else(|| 10.0 * scenario.horizon_estimate());
        let mut rng = streams.stream(Stream::Breakdowns);
        scenario.breakdowns = (0..config.n_workstations)
            .map(|_| draw_breakdowns(config, horizon, &mut rng))
            .collect::<Result<_, _>>()?;
    }
    Ok(scenario)
}

fn int_draw(rng: &mut StreamRng, [lo, hi]: [f64; 2]) -> f64 {
    let lo = lo.ceil() as i64;
    let hi = hi.floor() as i64;
    rng.random_range(lo..=hi) as f64
}

fn draw_layout(config: &ScenarioConfig, rng: &mut StreamRng) -> Layout {
    let n = 1 + config.n_workstations + config.n_chargers;
    let mut t = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = int_draw(rng, config.layout_range);
            t[i][j] = d;
            t[j][i] = d;
        }
    }
    Layout {
        n_workstations: config.n_workstations,
        n_chargers: config.n_chargers,
        transfer_times: t,
    }
}

fn draw_products(config: &ScenarioConfig, rng: &mut StreamRng) -> Vec<Product> {
    config
        .routings
        .iter()
        .enumerate()
        .map(|(p, ops)| Product {
            name: format!("P{}", p + 1),
            operations: ops
                .iter()
                .map(|set| OperationSpec {
                    eligible: set.iter().map(|&w| WsId(w)).collect(),
                    times: set
                        .iter()
                        .map(|_| int_draw(rng, config.processing_time_range))
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

fn draw_jobs(
    config: &ScenarioConfig,
    products: &[Product],
    streams: &SeededStreams,
) -> Result<Vec<JobSpec>, ScenarioError> {
    let inter = Exp::new(1.0 / config.interarrival_mean)
        .map_err(|e| ScenarioError::InvalidConfig(format!("inter-arrival: {e}")))?;
    let t_dist = Normal::new(config.due_t_mean(), config.due_date.t_sd)
        .map_err(|e| ScenarioError::InvalidConfig(format!("due-date coefficient: {e}")))?;
    let mut arrivals = streams.stream(Stream::Arrivals);
    let mut due_rng = streams.stream(Stream::DueDates);

    let mut clock = 0.0;
    let mut jobs = Vec::with_capacity(config.n_jobs);
    for i in 0..config.n_jobs {
        clock += inter.sample(&mut arrivals);
        let product = i % products.len();
        let raw_t: f64 = t_dist.sample(&mut due_rng);
        let t = formulas::clamp_due_coefficient(raw_t, config.due_date.t_floor);
        let means: Vec<f64> = products[product]
            .operations
            .iter()
            .map(OperationSpec::mean_time)
            .collect();
        jobs.push(JobSpec {
            id: JobId(i),
            product,
            arrival: clock,
            due_date: formulas::due_date(clock, t, &means),
            t_draw: t,
        });
    }
    Ok(jobs)
}

fn draw_breakdowns(
    config: &ScenarioConfig,
    horizon: f64,
    rng: &mut StreamRng,
) -> Result<Vec<Downtime>, ScenarioError> {
    let tbi = Exp::new(1.0 / config.breakdown.tbi_mean)
        .map_err(|e| ScenarioError::InvalidConfig(format!("tbi: {e}")))?;
    let trf = Exp::new(1.0 / config.breakdown.trf_mean)
        .map_err(|e| ScenarioError::InvalidConfig(format!("trf: {e}")))?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += tbi.sample(rng);
        if t >= horizon {
            break;
        }
        let d = trf.sample(rng);
        if d > 0.0 {
            out.push(Downtime { start: t, duration: d });
        }
        t += d;
    }
    Ok(out)
}
