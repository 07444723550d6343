//! Micro-instance fixture and a straight-line calculator for it.
//!
//! The calculator knows nothing about the simulator: it walks the few events
//! of a one-vehicle, capacity-one shop by hand, serving transfers first come
//! first served and each workstation in order of job arrival.

#![allow(dead_code)]

pub mod checks;
pub mod gradcheck;
pub mod props;

use aivsched::scenario::{parse_scenario, Scenario};

pub const MICRO_TOML: &str = include_str!("../fixtures/micro.toml");

pub fn micro_scenario() -> Scenario {
    parse_scenario(MICRO_TOML).expect("micro fixture parses")
}

/// Every workstation script for the micro instance, in decision order.
pub fn all_scripts(s: &Scenario) -> Vec<Vec<usize>> {
    let decisions: usize = s.jobs.iter().map(|j| s.product_of(j).operations.len()).sum();
    let m = s.n_workstations();
    (0..m.pow(decisions as u32))
        .map(|mut code| {
            (0..decisions)
                .map(|_| {
                    let w = code % m;
                    code /= m;
                    w
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub completion: Vec<f64>,
    pub total_tardiness: f64,
    pub n_tardy: usize,
    pub total_energy: f64,
    pub makespan: f64,
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Decide(usize),
    Arrive(usize, usize),
    Done(usize),
}

/// Hand calculation for a single vehicle of capacity one, no breakdowns and
/// no charging. `script` lists the chosen workstation of each decision in
/// the order the decisions occur.
pub fn oracle(s: &Scenario, script: &[usize]) -> OracleRun {
    assert_eq!(s.n_aivs(), 1);
    assert_eq!(s.aiv().capacity, 1);
    let d = |a: usize, b: usize| s.layout.transfer_times[a][b];
    let ws_node = |w: usize| 1 + w;
    let rates = &s.aiv().energy;
    let n = s.n_jobs();
    let m = s.n_workstations();

    let mut events: Vec<(f64, Ev)> = s.jobs.iter().enumerate().map(|(j, spec)| (spec.arrival, Ev::Decide(j))).collect();
    let mut node = vec![0usize; n];
    let mut op = vec![0usize; n];
    let mut completion = vec![f64::NAN; n];
    let mut ws_queue: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut ws_busy: Vec<Option<usize>> = vec![None; m];
    let mut aiv_free = 0.0;
    let mut aiv_at = 0usize;
    let mut moving_time = 0.0;
    let mut moving_energy = 0.0;
    let mut next = script.iter().copied();

    let start_next = |w: usize, t: f64, ws_queue: &mut Vec<Vec<usize>>, ws_busy: &mut Vec<Option<usize>>, op: &[usize], events: &mut Vec<(f64, Ev)>| {
        if ws_busy[w].is_none() && !ws_queue[w].is_empty() {
            let j = ws_queue[w].remove(0);
            let o = &s.product_of(&s.jobs[j]).operations[op[j]];
            let p = o.time_on(aivsched::model::WsId(w)).expect("eligible");
            ws_busy[w] = Some(j);
            events.push((t + p, Ev::Done(w)));
        }
    };

    while !events.is_empty() {
        // earliest event; ties resolve in insertion order
        let i = (0..events.len())
            .min_by(|&a, &b| events[a].0.total_cmp(&events[b].0).then(a.cmp(&b)))
            .unwrap();
        let (t, ev) = events.remove(i);
        match ev {
            Ev::Decide(j) => {
                let w = next.next().expect("script long enough");
                let dest = ws_node(w);
                if node[j] == dest {
                    events.push((t, Ev::Arrive(j, w)));
                } else {
                    let start = if aiv_free > t { aiv_free } else { t };
                    let empty = d(aiv_at, node[j]);
                    let loaded = d(node[j], dest);
                    moving_energy += empty * rates.moving[0] + loaded * rates.moving[1];
                    moving_time += empty + loaded;
                    aiv_free = start + empty + loaded;
                    aiv_at = dest;
                    events.push((aiv_free, Ev::Arrive(j, w)));
                }
            }
            Ev::Arrive(j, w) => {
                node[j] = ws_node(w);
                ws_queue[w].push(j);
                start_next(w, t, &mut ws_queue, &mut ws_busy, &op, &mut events);
            }
            Ev::Done(w) => {
                let j = ws_busy[w].take().unwrap();
                op[j] += 1;
                if op[j] == s.product_of(&s.jobs[j]).operations.len() {
                    completion[j] = t;
                } else {
                    events.push((t, Ev::Decide(j)));
                }
                start_next(w, t, &mut ws_queue, &mut ws_busy, &op, &mut events);
            }
        }
    }
    assert!(next.next().is_none(), "script longer than the decisions");

    let makespan = completion.iter().copied().fold(0.0, f64::max);
    let total_energy = moving_energy + rates.not_moving * (makespan - moving_time);
    assert!(s.aiv().initial_battery - total_energy >= s.aiv().charge_threshold, "oracle does not model charging");
    let late: Vec<f64> = completion.iter().zip(&s.jobs).map(|(c, j)| (c - j.due_date).max(0.0)).collect();
    OracleRun {
        total_tardiness: late.iter().sum(),
        n_tardy: late.iter().filter(|&&v| v > 0.0).count(),
        completion,
        total_energy,
        makespan,
    }
}
