//! Checks for the closed-form quantities, shared by the property tests and
//! the acceptance run. Each returns a description of the first violation.

use aivsched::formulas::{current_tardiness, final_reward, lateness, tardiness};
use aivsched::scenario::{generate_scenario, parse_scenario, scenario_to_string, ScenarioConfig};

pub const FORMULA_CASES: u32 = 10_000;

/// Clamped at zero, equal to the unclamped value when positive, and
/// non-decreasing in the clock and in the remaining work.
pub fn check_current_tardiness(k: f64, rpt: f64, now: f64, due: f64, dt: f64, drpt: f64) -> Result<(), String> {
    let ct = current_tardiness(k, rpt, now, due);
    let raw = k * rpt + now - due;
    if ct < 0.0 {
        return Err(format!("negative current tardiness {ct}"));
    }
    if raw > 0.0 && ct != raw {
        return Err(format!("positive part altered: {ct} vs {raw}"));
    }
    if raw <= 0.0 && ct != 0.0 {
        return Err(format!("not clamped: {ct} for {raw}"));
    }
    if current_tardiness(k, rpt, now + dt, due) < ct {
        return Err(format!("decreases with the clock at now={now}, dt={dt}"));
    }
    if current_tardiness(k, rpt + drpt, now, due) < ct {
        return Err(format!("decreases with remaining work at rpt={rpt}, d={drpt}"));
    }
    Ok(())
}

/// The terminal reward is positive exactly for early jobs and its negative
/// part is the tardiness.
pub fn check_final_reward(completion: f64, due: f64) -> Result<(), String> {
    let r = final_reward(completion, due);
    let sign_ok = match completion.partial_cmp(&due) {
        Some(std::cmp::Ordering::Less) => r > 0.0,
        Some(std::cmp::Ordering::Greater) => r < 0.0,
        _ => r == 0.0,
    };
    if !sign_ok {
        return Err(format!("reward {r} for completion {completion}, due {due}"));
    }
    if r != -lateness(completion, due) || tardiness(completion, due) != (-r).max(0.0) {
        return Err(format!("reward {r} inconsistent with lateness/tardiness"));
    }
    Ok(())
}

/// Generates an instance, writes and re-reads it, and rebuilds every due
/// date from its arrival, stored coefficient and the routing's mean times.
/// Returns the number of jobs checked.
pub fn check_due_date_reconstruction(seed: u64, n_jobs: usize, products: usize) -> Result<usize, String> {
    let cfg = ScenarioConfig::case_study(n_jobs)
        .with_seed(seed)
        .with_products(products)
        .map_err(|e| e.to_string())?;
    let written = generate_scenario(&cfg).map_err(|e| e.to_string())?;
    let s = parse_scenario(&scenario_to_string(&written).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for job in &s.jobs {
        let mut work = 0.0;
        for op in &s.product_of(job).operations {
            work += op.times.iter().sum::<f64>() / op.times.len() as f64;
        }
        let due = job.arrival + job.t_draw * work;
        if due != job.due_date {
            return Err(format!("seed {seed} {}: stored {} rebuilt {due}", job.id, job.due_date));
        }
        if job.t_draw < cfg.due_date.t_floor {
            return Err(format!("seed {seed} {}: coefficient {} below the floor", job.id, job.t_draw));
        }
    }
    Ok(s.jobs.len())
}
