use super::*;
use crate::model::{AivConfig, Downtime, JobSpec, Layout, OperationSpec, Product, StationId};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};

/// Nodes: S, WS1, WS2, CH1.
fn small_layout() -> Layout {
    Layout {
        n_workstations: 2,
        n_chargers: 1,
        transfer_times: vec![
            vec![0.0, 14.0, 20.0, 30.0],
            vec![14.0, 0.0, 10.0, 25.0],
            vec![20.0, 10.0, 0.0, 12.0],
            vec![30.0, 25.0, 12.0, 0.0],
        ],
    }
}

fn op(eligible: &[(usize, f64)]) -> OperationSpec {
    OperationSpec {
        eligible: eligible.iter().map(|&(w, _)| WsId(w)).collect(),
        times: eligible.iter().map(|&(_, t)| t).collect(),
    }
}

fn fixture(
    layout: Layout,
    ops: Vec<OperationSpec>,
    arrivals: &[f64],
    aiv: AivConfig,
) -> Scenario {
    let mut config = ScenarioConfig::case_study(arrivals.len());
    config.n_workstations = layout.n_workstations;
    config.n_chargers = layout.n_chargers;
    config.routings = vec![ops.iter().map(|o| o.eligible.iter().map(|w| w.0).collect()).collect()];
    config.breakdown.enabled = false;
    config.aiv = aiv;
    Scenario {
        seed: 0,
        config,
        breakdowns: vec![Vec::new(); layout.n_workstations],
        layout,
        products: vec![Product { name: "P1".into(), operations: ops }],
        jobs: arrivals
            .iter()
            .enumerate()
            .map(|(i, &a)| JobSpec { id: JobId(i), product: 0, arrival: a, due_date: a + 100.0, t_draw: 1.0 })
            .collect(),
    }
}

fn one_aiv(capacity: usize) -> AivConfig {
    AivConfig { count: 1, capacity, ..AivConfig::default() }
}

fn kinds(sim: &Simulation<'_>, kind: &str) -> Vec<TraceRecord> {
    sim.trace().unwrap().iter().filter(|r| r.kind == kind).cloned().collect()
}

#[test]
fn single_arrival_advances_clock() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[5.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let out = sim.advance_to_next_event().unwrap();
    assert_eq!(out, EventOutcome::Applied(EventKind::JobArrival { job: JobId(0) }));
    assert_eq!(sim.now(), 5.0);
    assert_eq!(sim.job(JobId(0)).status, JobStatus::WaitingForTransport);
    assert_eq!(sim.advance_to_next_event().unwrap(), EventOutcome::Decision(JobId(0)));
}

#[test]
fn equal_time_arrivals_in_insertion_order() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[3.0, 3.0, 3.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let mut seen = Vec::new();
    for _ in 0..6 {
        match sim.advance_to_next_event().unwrap() {
            EventOutcome::Applied(EventKind::JobArrival { job }) => seen.push(("a", job)),
            EventOutcome::Decision(job) => seen.push(("d", job)),
            other => panic!("{other:?}"),
        }
    }
    // arrivals outrank decisions at equal time
    let expect: Vec<_> = [("a", 0), ("a", 1), ("a", 2), ("d", 0), ("d", 1), ("d", 2)]
        .iter()
        .map(|&(k, j)| (k, JobId(j)))
        .collect();
    assert_eq!(seen, expect);
}

#[test]
fn idle_vehicle_single_leg() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0)], [AivId(0)]);
    let m = run_policy(&mut sim, &mut p).unwrap();
    let deliver = &kinds(&sim, "deliver")[0];
    assert_eq!(deliver.time, 14.0);
    assert_eq!(m.makespan, 22.0);
    // 14 units moving with one product, 8 units idle at WS1
    let expected = 14.0 * 0.05 + 8.0 * 0.01;
    assert!((m.total_energy - expected).abs() < 1e-12);
}

#[test]
fn pickup_leg_adds_distance_to_storage() {
    // job 0 leaves the vehicle at WS2; job 1 then needs it back at storage
    let s = fixture(small_layout(), vec![op(&[(1, 5.0)])], &[0.0, 50.0], one_aiv(1));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(1), WsId(1)], [AivId(0), AivId(0)]);
    run_policy(&mut sim, &mut p).unwrap();
    let d = kinds(&sim, "deliver");
    assert_eq!(d[0].time, 20.0);
    assert_eq!(d[1].time, 50.0 + 20.0 + 20.0);
}

#[test]
fn fifo_service_order() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0, 0.0, 0.0, 0.0], one_aiv(1));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0); 4], [AivId(0); 4]);
    run_policy(&mut sim, &mut p).unwrap();
    let order: Vec<String> = kinds(&sim, "pickup").iter().map(|r| r.detail.clone()).collect();
    assert_eq!(order, ["J1", "J2", "J3", "J4"]);
}

#[test]
fn fourth_request_joins_behind_three() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0, 0.0, 0.0, 0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let mut p = ScriptedPolicy::new([WsId(0); 4], [AivId(0); 4]);
    for _ in 0..8 {
        if let EventOutcome::Decision(j) = sim.advance_to_next_event().unwrap() {
            decide(&mut sim, &mut p, j).unwrap();
        }
    }
    let a = sim.aiv(AivId(0));
    assert_eq!(a.pending.len(), 3);
    assert_eq!(a.queue_len(), 4);
    assert_eq!(a.pending.back().unwrap().job, JobId(3));
}

#[test]
fn capacity_two_picks_up_both_first() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0), (1, 1.0)])], &[0.0, 0.0], one_aiv(2));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0), WsId(1)], [AivId(0), AivId(0)]);
    run_policy(&mut sim, &mut p).unwrap();
    let seq: Vec<&str> = sim
        .trace()
        .unwrap()
        .iter()
        .filter(|r| r.kind == "pickup" || r.kind == "deliver")
        .map(|r| r.kind)
        .collect();
    // the first request is alone in the first tour because dispatch is immediate
    assert_eq!(seq, ["pickup", "deliver", "pickup", "deliver"]);

    // with the vehicle busy elsewhere, two queued requests share one tour
    let s = fixture(small_layout(), vec![op(&[(0, 1.0), (1, 1.0)])], &[0.0, 1.0, 1.0], one_aiv(2));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0), WsId(0), WsId(1)], [AivId(0); 3]);
    run_policy(&mut sim, &mut p).unwrap();
    let seq: Vec<&str> = sim
        .trace()
        .unwrap()
        .iter()
        .filter(|r| r.kind == "pickup" || r.kind == "deliver")
        .map(|r| r.kind)
        .collect();
    assert_eq!(seq, ["pickup", "deliver", "pickup", "pickup", "deliver", "deliver"]);
    assert!(sim.aivs().iter().all(|a| a.cargo.is_empty()));
}

#[test]
fn three_pending_capacity_two_needs_two_tours() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0, 1.0, 1.0, 1.0], one_aiv(2));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0); 4], [AivId(0); 4]);
    run_policy(&mut sim, &mut p).unwrap();
    let tours: Vec<String> = kinds(&sim, "tour").iter().map(|r| r.detail.clone()).collect();
    assert_eq!(tours, ["J1", "J2,J3", "J4"]);
}

#[test]
fn loaded_leg_energy_moving_two() {
    // 10-unit S -> WS1 leg with two products aboard
    let mut layout = small_layout();
    layout.transfer_times[0][1] = 10.0;
    layout.transfer_times[1][0] = 10.0;
    let s = fixture(layout, vec![op(&[(0, 1.0)])], &[0.0, 1.0, 1.0], one_aiv(2));
    let mut sim = Simulation::new(&s);
    let mut p = ScriptedPolicy::new([WsId(0); 3], [AivId(0); 3]);
    run_policy(&mut sim, &mut p).unwrap();
    let two = sim
        .ledger()
        .entries(0)
        .iter()
        .find(|e| e.class == LoadClass::Moving(2))
        .copied()
        .unwrap();
    assert_eq!(two.end - two.start, 10.0);
    assert!((two.pct - 1.0).abs() < 1e-12);
}

#[test]
fn consume_energy_rates() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    assert!((sim.consume_energy(AivId(0), 100.0, LoadClass::NotMoving) - 1.0).abs() < 1e-12);
    assert!((sim.consume_energy(AivId(0), 20.0, LoadClass::Moving(1)) - 1.0).abs() < 1e-12);
    assert_eq!(sim.consume_energy(AivId(0), 0.0, LoadClass::Moving(2)), 0.0);
    assert!((sim.aiv(AivId(0)).battery - 98.0).abs() < 1e-12);
    assert_eq!(sim.ledger().entries(0).len(), 2);
}

#[test]
fn depletion_clamps_and_flags() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let used = sim.consume_energy(AivId(0), 5000.0, LoadClass::Moving(2));
    assert_eq!(used, 100.0);
    assert_eq!(sim.aiv(AivId(0)).battery, 0.0);
    assert_eq!(sim.diagnostics().len(), 1);
}

fn with_battery(b: f64) -> AivConfig {
    AivConfig { count: 1, capacity: 1, initial_battery: b, ..AivConfig::default() }
}

#[test]
fn charge_threshold_is_strict() {
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0], with_battery(39.9));
    assert_eq!(Simulation::new(&s).charging_policy_check(AivId(0)), Some(StationId(0)));
    let s = fixture(small_layout(), vec![op(&[(0, 1.0)])], &[0.0], with_battery(40.0));
    assert_eq!(Simulation::new(&s).charging_policy_check(AivId(0)), None);
}

#[test]
fn low_battery_after_tour_goes_charging() {
    let s = fixture(small_layout(), vec![op(&[(0, 100.0)])], &[0.0], with_battery(40.5));
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0)], [AivId(0)]);
    run_policy(&mut sim, &mut p).unwrap();
    // 14 units at 0.05 = 0.7 -> 39.8 at WS1, then 25 units to CH1, then 30 charging
    let start = &kinds(&sim, "charge-start")[0];
    assert_eq!(start.time, 39.0);
    assert_eq!(kinds(&sim, "charge-done")[0].time, 69.0);
    let a = sim.aiv(AivId(0));
    assert_eq!(sim.ledger().recharge_count(0), 1);
    assert!(sim.ledger().conservation_residual(0, a.battery).abs() < 1e-9);
    assert!(sim.ledger().is_contiguous(0));
    // idle at the charger from 69 to the end of processing at 114
    assert!((a.battery - (100.0 - 45.0 * 0.01)).abs() < 1e-9);
}

#[test]
fn occupied_charger_queues_fifo() {
    let aiv = AivConfig { count: 2, capacity: 1, initial_battery: 40.5, ..AivConfig::default() };
    let s = fixture(small_layout(), vec![op(&[(0, 200.0)])], &[0.0, 0.0], aiv);
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0), WsId(0)], [AivId(0), AivId(1)]);
    run_policy(&mut sim, &mut p).unwrap();
    let starts = kinds(&sim, "charge-start");
    assert_eq!(starts.len(), 2);
    assert_eq!(kinds(&sim, "charger-wait").len(), 1);
    // second vehicle starts exactly when the first one leaves
    assert_eq!(starts[1].time, starts[0].time + 30.0);
    for a in 0..2 {
        let b = sim.aiv(AivId(a)).battery;
        assert!(sim.ledger().conservation_residual(a, b).abs() < 1e-9);
    }
}

#[test]
fn scripted_breakdown_preserves_remaining_time() {
    let mut s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    // processing starts at 14; break 3 units in for 50
    s.breakdowns[0] = vec![Downtime { start: 17.0, duration: 50.0 }];
    let mut sim = Simulation::new(&s).with_trace();
    let mut p = ScriptedPolicy::new([WsId(0)], [AivId(0)]);
    let m = run_policy(&mut sim, &mut p).unwrap();
    assert_eq!(m.makespan, 17.0 + 50.0 + 5.0);
    assert_eq!(kinds(&sim, "resume")[0].detail, "J1 remaining=5");
}

#[test]
fn busy_workstation_breakdown_via_api() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let mut p = ScriptedPolicy::new([WsId(0)], [AivId(0)]);
    loop {
        match sim.advance_to_next_event().unwrap() {
            EventOutcome::Decision(j) => decide(&mut sim, &mut p, j).unwrap(),
            EventOutcome::Complete => break,
            EventOutcome::Applied(_) => {}
        }
        if sim.workstation(WsId(0)).current.is_some() && sim.now() == 14.0 {
            sim.apply_unavailability(WsId(0), 19.0, 50.0).unwrap();
        }
    }
    // 5 units into the 8-unit operation, completes 50 + 3 after the breakdown
    assert_eq!(sim.now(), 19.0 + 53.0);
    assert!(sim.apply_unavailability(WsId(0), 100.0, 0.0).is_err());
}

#[test]
fn overlapping_windows_merge() {
    let mut s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    s.breakdowns[0] = vec![
        Downtime { start: 15.0, duration: 10.0 },
        Downtime { start: 20.0, duration: 10.0 },
    ];
    let mut sim = Simulation::new(&s);
    let mut p = ScriptedPolicy::new([WsId(0)], [AivId(0)]);
    let m = run_policy(&mut sim, &mut p).unwrap();
    // 1 unit done, down 15..30, 7 remaining
    assert_eq!(m.makespan, 37.0);
}

#[test]
fn idle_breakdown_repaired_before_arrival_changes_nothing() {
    let base = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[100.0], one_aiv(1));
    let mut broken = base.clone();
    broken.breakdowns[0] = vec![Downtime { start: 10.0, duration: 50.0 }];
    let run = |s: &Scenario| {
        let mut sim = Simulation::new(s);
        run_policy(&mut sim, &mut ScriptedPolicy::new([WsId(0)], [AivId(0)])).unwrap()
    };
    assert_eq!(run(&base), run(&broken));
}

#[test]
fn unavailable_workstation_refuses_start() {
    let mut s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    s.breakdowns[0] = vec![Downtime { start: 1.0, duration: 50.0 }];
    let mut sim = Simulation::new(&s).with_trace();
    let m = run_policy(&mut sim, &mut ScriptedPolicy::new([WsId(0)], [AivId(0)])).unwrap();
    assert_eq!(kinds(&sim, "start")[0].time, 51.0);
    assert_eq!(m.makespan, 59.0);
}

#[test]
fn local_operation_needs_no_vehicle() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)]), op(&[(0, 4.0), (1, 4.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s).with_trace();
    let m = run_policy(&mut sim, &mut ScriptedPolicy::new([WsId(0), WsId(0)], [AivId(0)])).unwrap();
    assert_eq!(m.makespan, 14.0 + 8.0 + 4.0);
    assert_eq!(kinds(&sim, "tour").len(), 1);
}

#[test]
fn infeasible_choices_rejected() {
    let s = fixture(small_layout(), vec![op(&[(0, 8.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    sim.advance_to_next_event().unwrap();
    sim.advance_to_next_event().unwrap();
    assert!(matches!(sim.assign_workstation(JobId(0), WsId(1)), Err(SimError::InfeasibleAction(_))));
    sim.assign_workstation(JobId(0), WsId(0)).unwrap();
    assert!(matches!(sim.enqueue_transport(JobId(0), AivId(3)), Err(SimError::InfeasibleAction(_))));
    sim.enqueue_transport(JobId(0), AivId(0)).unwrap();
    assert!(matches!(sim.enqueue_transport(JobId(0), AivId(0)), Err(SimError::InvalidTransition(_))));
}

#[test]
fn lateness_recorded_on_completion() {
    let s = fixture(small_layout(), vec![op(&[(0, 106.0)])], &[0.0], one_aiv(1));
    let mut sim = Simulation::new(&s);
    let m = run_policy(&mut sim, &mut ScriptedPolicy::new([WsId(0)], [AivId(0)])).unwrap();
    assert_eq!(sim.job(JobId(0)).completion_time, Some(120.0));
    assert_eq!(m.total_tardiness, 20.0);
    assert_eq!(m.n_tardy, 1);
}

/// Always the first eligible workstation and vehicle `job % n`.
struct RoundRobin;

impl Policy for RoundRobin {
    fn name(&self) -> String {
        "rr".into()
    }
    fn select_workstation(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<WsId, SimError> {
        let j = sim.job(job);
        let op = j.current_operation().unwrap();
        Ok(op.eligible[(job.0 + j.next_op) % op.eligible.len()])
    }
    fn select_aiv(&mut self, sim: &Simulation<'_>, job: JobId) -> Result<AivId, SimError> {
        Ok(AivId((job.0 + sim.job(job).next_op) % sim.aivs().len()))
    }
}

#[test]
fn generated_runs_conserve_energy_and_repeat() {
    for seed in 0..10 {
        let s = generate_scenario(&ScenarioConfig::case_study(40).with_seed(seed)).unwrap();
        let mut a = Simulation::new(&s).with_trace();
        let ma = run_policy(&mut a, &mut RoundRobin).unwrap();
        let mut b = Simulation::new(&s).with_trace();
        let mb = run_policy(&mut b, &mut RoundRobin).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(trace_to_string(a.trace().unwrap()), trace_to_string(b.trace().unwrap()));
        assert_eq!(ma.completed, 40);
        for (i, v) in a.aivs().iter().enumerate() {
            assert!(a.ledger().conservation_residual(i, v.battery).abs() < 1e-9);
            assert!(a.ledger().is_contiguous(i));
            assert_eq!(a.ledger().entries(i).last().unwrap().end, ma.makespan);
        }
        let t: f64 = a
            .jobs()
            .iter()
            .map(|j| (j.completion_time.unwrap() - j.due_date).max(0.0))
            .sum();
        assert_eq!(t, ma.total_tardiness);
    }
}
