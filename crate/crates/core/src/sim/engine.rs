use std::collections::VecDeque;

use crate::formulas;
use crate::model::{AivId, JobId, NodeId, StationId, Time, WsId};
use crate::scenario::Scenario;

use super::energy::{EnergyLedger, LedgerEntry, LoadClass};
use super::event::{EventKind, EventQueue};
use super::state::{
    Aiv, AivStatus, ChargingStation, Errand, Job, JobLocation, JobStatus, Leg, Operation, Stop,
    TransportRequest, Workstation,
};
use super::trace::TraceRecord;
use super::{Diagnostic, Notice, RunMetrics, SimError};

/// What one call to [`Simulation::advance_to_next_event`] produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOutcome {
    /// An event was applied; no decision is pending.
    Applied(EventKind),
    /// The job needs a workstation (and possibly a vehicle) now.
    Decision(JobId),
    /// Every job is completed; the clock stays at the last completion.
    Complete,
}

/// Result of assigning a workstation to a waiting job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    /// The job is elsewhere; a vehicle must be chosen next.
    NeedsTransport,
    /// The job already sits at the chosen workstation and joined its queue.
    Local,
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    clock: Time,
    jobs: Vec<Job>,
    workstations: Vec<Workstation>,
    aivs: Vec<Aiv>,
    chargers: Vec<ChargingStation>,
    events: EventQueue,
    ledger: EnergyLedger,
    trace: Option<Vec<TraceRecord>>,
    notices: VecDeque<Notice>,
    diagnostics: Vec<Diagnostic>,
    completed: usize,
    finished: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let layout = &scenario.layout;
        let aiv_cfg = scenario.aiv();
        let jobs = scenario
            .jobs
            .iter()
            .map(|spec| Job {
                id: spec.id,
                product: spec.product,
                arrival: spec.arrival,
                due_date: spec.due_date,
                operations: scenario.products[spec.product]
                    .operations
                    .iter()
                    .map(|op| Operation {
                        eligible: op.eligible.clone(),
                        processing_time: op.times.clone(),
                        assigned: None,
                        remaining: 0.0,
                    })
                    .collect(),
                next_op: 0,
                status: JobStatus::NotArrived,
                completion_time: None,
                location: JobLocation::Outside,
                awaiting_decision: false,
                carrier: None,
                transfer_start: None,
            })
            .collect();
        let aivs: Vec<Aiv> = (0..aiv_cfg.count)
            .map(|i| Aiv {
                id: AivId(i),
                battery: aiv_cfg.initial_battery,
                capacity: aiv_cfg.capacity,
                cargo: Vec::new(),
                pending: VecDeque::new(),
                location: layout.storage(),
                status: AivStatus::Idle,
                busy_time: 0.0,
                leg: None,
                errand: Errand::None,
                segment_start: 0.0,
                segment_class: LoadClass::NotMoving,
            })
            .collect();
        let chargers = (0..layout.n_chargers)
            .map(|i| ChargingStation {
                id: StationId(i),
                node: layout.charger_node(StationId(i)),
                occupant: None,
                wait_queue: VecDeque::new(),
            })
            .collect();

        let mut events = EventQueue::default();
        for spec in &scenario.jobs {
            events.push(spec.arrival, EventKind::JobArrival { job: spec.id });
        }
        for (w, windows) in scenario.breakdowns.iter().enumerate() {
            for d in windows {
                events.push(
                    d.start,
                    EventKind::Breakdown { ws: WsId(w), duration_bits: d.duration.to_bits() },
                );
            }
        }

        Self {
            scenario,
            clock: 0.0,
            jobs,
            workstations: (0..layout.n_workstations).map(|w| Workstation::new(WsId(w))).collect(),
            ledger: EnergyLedger::new(&vec![aiv_cfg.initial_battery; aiv_cfg.count]),
            aivs,
            chargers,
            events,
            trace: None,
            notices: VecDeque::new(),
            diagnostics: Vec::new(),
            completed: 0,
            finished: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    // ---- read access -------------------------------------------------

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn now(&self) -> Time {
        self.clock
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, id: JobId) -> &Job {
        &self.jobs[id.0]
    }

    pub fn workstations(&self) -> &[Workstation] {
        &self.workstations
    }

    pub fn workstation(&self, id: WsId) -> &Workstation {
        &self.workstations[id.0]
    }

    pub fn aivs(&self) -> &[Aiv] {
        &self.aivs
    }

    pub fn aiv(&self, id: AivId) -> &Aiv {
        &self.aivs[id.0]
    }

    pub fn chargers(&self) -> &[ChargingStation] {
        &self.chargers
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn completed_jobs(&self) -> usize {
        self.completed
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    pub fn drain_notices(&mut self) -> impl Iterator<Item = Notice> + '_ {
        self.notices.drain(..)
    }

    /// Node a waiting job would be picked up from.
    pub fn pickup_node(&self, job: JobId) -> Option<NodeId> {
        self.jobs[job.0].node()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Time {
        self.scenario.layout.distance(a, b)
    }

    // ---- kernel ------------------------------------------------------

    /// Pops the next live event, advances the clock and applies it.
    pub fn advance_to_next_event(&mut self) -> Result<EventOutcome, SimError> {
        loop {
            if self.finished {
                return Ok(EventOutcome::Complete);
            }
            let Some(ev) = self.events.pop() else {
                if self.completed == self.jobs.len() {
                    self.finish();
                    return Ok(EventOutcome::Complete);
                }
                return Err(SimError::Stalled {
                    time: self.clock,
                    completed: self.completed,
                    total: self.jobs.len(),
                });
            };
            if ev.time < self.clock {
                return Err(SimError::Corruption(format!(
                    "event {} at {} precedes clock {}",
                    ev.kind.label(),
                    ev.time,
                    self.clock
                )));
            }
            if self.is_stale(&ev.kind, ev.time) {
                continue;
            }
            self.clock = ev.time;
            let outcome = self.apply(ev.kind)?;
            if self.completed == self.jobs.len() {
                self.finish();
            }
            return Ok(outcome);
        }
    }

    fn is_stale(&self, kind: &EventKind, time: Time) -> bool {
        match *kind {
            EventKind::OperationComplete { ws, token } => self.workstations[ws.0].token != token,
            EventKind::Repair { ws } => {
                let w = &self.workstations[ws.0];
                w.available || w.unavailable_until.is_some_and(|u| time < u)
            }
            EventKind::Decision { job } => !self.jobs[job.0].awaiting_decision,
            _ => false,
        }
    }

    fn apply(&mut self, kind: EventKind) -> Result<EventOutcome, SimError> {
        match kind {
            EventKind::JobArrival { job } => self.on_arrival(job),
            EventKind::Decision { job } => {
                self.record("decision", job.to_string(), format!("op={}", self.jobs[job.0].next_op + 1));
                return Ok(EventOutcome::Decision(job));
            }
            EventKind::OperationComplete { ws, .. } => self.on_operation_complete(ws)?,
            EventKind::AivArrive { aiv } => self.on_aiv_arrive(aiv)?,
            EventKind::ChargeComplete { aiv, station } => self.on_charge_complete(aiv, station),
            EventKind::Breakdown { ws, duration_bits } => {
                self.on_breakdown(ws, f64::from_bits(duration_bits));
            }
            EventKind::Repair { ws } => self.on_repair(ws),
        }
        Ok(EventOutcome::Applied(kind))
    }

    fn finish(&mut self) {
        if self.finished {
            return;
        }
        for a in 0..self.aivs.len() {
            self.close_segment(a);
        }
        self.finished = true;
        self.record("end", "-".into(), format!("completed={}", self.completed));
    }

    fn record(&mut self, kind: &'static str, entity: String, detail: String) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord { time: self.clock, kind, entity, detail });
        }
    }

    // ---- jobs --------------------------------------------------------

    fn on_arrival(&mut self, job: JobId) {
        let storage = self.scenario.layout.storage();
        let j = &mut self.jobs[job.0];
        j.status = JobStatus::WaitingForTransport;
        j.location = JobLocation::Node(storage);
        j.awaiting_decision = true;
        self.events.push(self.clock, EventKind::Decision { job });
        self.record("arrival", job.to_string(), format!("product=P{}", self.jobs[job.0].product + 1));
    }

    /// Commits the workstation for the job's next operation. If the job is
    /// already at that workstation it joins the queue directly.
    pub fn assign_workstation(&mut self, job: JobId, ws: WsId) -> Result<Assignment, SimError> {
        let j = &self.jobs[job.0];
        if !j.awaiting_decision || j.status != JobStatus::WaitingForTransport {
            return Err(SimError::InvalidTransition(format!("{job} is not awaiting a workstation decision")));
        }
        let op = j.current_operation().ok_or_else(|| {
            SimError::InvalidTransition(format!("{job} has no remaining operation"))
        })?;
        let Some(time) = op.time_on(ws) else {
            return Err(SimError::InfeasibleAction(format!(
                "{ws} is not eligible for {job} operation {}",
                j.next_op + 1
            )));
        };
        let here = j.node();
        let target = self.scenario.layout.ws_node(ws);
        let j = &mut self.jobs[job.0];
        let op_index = j.next_op;
        let op = &mut j.operations[op_index];
        op.assigned = Some(ws);
        op.remaining = time;
        self.record("assign-ws", job.to_string(), ws.to_string());
        if here == Some(target) {
            let j = &mut self.jobs[job.0];
            j.awaiting_decision = false;
            j.status = JobStatus::QueuedAtWorkstation;
            self.workstations[ws.0].queue.push_back(job);
            self.record("enqueue", ws.to_string(), format!("{job} local"));
            self.try_start(ws);
            Ok(Assignment::Local)
        } else {
            Ok(Assignment::NeedsTransport)
        }
    }

    /// Appends a transfer request for `job` to the vehicle's FIFO queue and
    /// starts a tour if the vehicle is idle.
    pub fn enqueue_transport(&mut self, job: JobId, aiv: AivId) -> Result<(), SimError> {
        if aiv.0 >= self.aivs.len() {
            return Err(SimError::InfeasibleAction(format!("{aiv} does not exist")));
        }
        let j = &self.jobs[job.0];
        if j.status != JobStatus::WaitingForTransport || !j.awaiting_decision {
            return Err(SimError::InvalidTransition(format!("{job} is not waiting for transport")));
        }
        let dest = j
            .current_operation()
            .and_then(|op| op.assigned)
            .ok_or_else(|| SimError::InvalidTransition(format!("{job} has no assigned workstation")))?;
        let origin = j
            .node()
            .ok_or_else(|| SimError::InvalidTransition(format!("{job} is not at a node")))?;
        if origin == self.scenario.layout.ws_node(dest) {
            return Err(SimError::InvalidTransition(format!("{job} is already at {dest}")));
        }
        let req = TransportRequest { job, origin, destination: dest, request_time: self.clock };
        let j = &mut self.jobs[job.0];
        j.awaiting_decision = false;
        j.carrier = Some(aiv);
        j.transfer_start = None;
        self.aivs[aiv.0].pending.push_back(req);
        self.record(
            "assign-aiv",
            job.to_string(),
            format!("{aiv} queue={}", self.aivs[aiv.0].pending.len()),
        );
        if matches!(self.aivs[aiv.0].errand, Errand::None) {
            self.dispatch_idle(aiv.0);
        }
        Ok(())
    }

    fn complete_operation(&mut self, job: JobId, ws: WsId) {
        let now = self.clock;
        let node = self.scenario.layout.ws_node(ws);
        let j = &mut self.jobs[job.0];
        let op = j.next_op;
        j.next_op += 1;
        j.location = JobLocation::Node(node);
        j.carrier = None;
        j.transfer_start = None;
        self.notices.push_back(Notice::OperationCompleted { job, op, time: now });
        if j.next_op < j.operations.len() {
            j.status = JobStatus::WaitingForTransport;
            j.awaiting_decision = true;
            self.events.push(now, EventKind::Decision { job });
            self.record("op-done", job.to_string(), format!("op={} at={ws}", op + 1));
        } else {
            j.status = JobStatus::Completed;
            j.completion_time = Some(now);
            self.completed += 1;
            self.notices.push_back(Notice::JobCompleted { job, time: now });
            let due = j.due_date;
            self.record(
                "job-done",
                job.to_string(),
                format!("op={} at={ws} lateness={}", op + 1, formulas::lateness(now, due)),
            );
        }
    }

    // ---- workstations ------------------------------------------------

    fn try_start(&mut self, ws: WsId) {
        let w = &mut self.workstations[ws.0];
        if !w.available || w.current.is_some() || w.suspended.is_some() {
            return;
        }
        let Some(job) = w.queue.pop_front() else { return };
        let remaining = {
            let j = &mut self.jobs[job.0];
            j.status = JobStatus::Processing;
            j.operations[j.next_op].remaining
        };
        let w = &mut self.workstations[ws.0];
        w.current = Some(job);
        w.started_at = self.clock;
        w.token += 1;
        let token = w.token;
        self.events.push(self.clock + remaining, EventKind::OperationComplete { ws, token });
        self.record("start", ws.to_string(), format!("{job} remaining={remaining}"));
    }

    /// Starts processing at the head of the workstation's queue if possible.
    /// A no-op while the workstation is unavailable or busy.
    pub fn start_processing(&mut self, ws: WsId) {
        self.try_start(ws);
    }

    fn on_operation_complete(&mut self, ws: WsId) -> Result<(), SimError> {
        let w = &mut self.workstations[ws.0];
        let job = w
            .current
            .take()
            .ok_or_else(|| SimError::Corruption(format!("{ws} completed with no job")))?;
        w.busy_time += self.clock - w.started_at;
        let j = &mut self.jobs[job.0];
        let op = j.next_op;
        j.operations[op].remaining = 0.0;
        self.complete_operation(job, ws);
        self.try_start(ws);
        Ok(())
    }

    /// Schedules an unavailability window `[at, at + duration)`. Overlapping
    /// windows merge; an interrupted operation keeps its remaining time.
    pub fn apply_unavailability(&mut self, ws: WsId, at: Time, duration: Time) -> Result<(), SimError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(SimError::InvalidArgument(format!("unavailability duration {duration} must be positive")));
        }
        if at < self.clock {
            return Err(SimError::InvalidArgument(format!("unavailability at {at} precedes clock {}", self.clock)));
        }
        self.events.push(at, EventKind::Breakdown { ws, duration_bits: duration.to_bits() });
        Ok(())
    }

    fn on_breakdown(&mut self, ws: WsId, duration: Time) {
        let now = self.clock;
        let until = now + duration;
        let w = &mut self.workstations[ws.0];
        if !w.available {
            let current = w.unavailable_until.unwrap_or(now);
            if until > current {
                w.unavailable_until = Some(until);
                self.events.push(until, EventKind::Repair { ws });
            }
            self.record("breakdown", ws.to_string(), format!("merged until={until}"));
            return;
        }
        w.available = false;
        w.unavailable_until = Some(until);
        if let Some(job) = w.current.take() {
            let elapsed = now - w.started_at;
            w.busy_time += elapsed;
            w.token += 1;
            w.suspended = Some(job);
            let j = &mut self.jobs[job.0];
            let op = &mut j.operations[j.next_op];
            op.remaining = (op.remaining - elapsed).max(0.0);
            let rem = op.remaining;
            self.record("suspend", ws.to_string(), format!("{job} remaining={rem}"));
        }
        self.events.push(until, EventKind::Repair { ws });
        self.record("breakdown", ws.to_string(), format!("until={until}"));
    }

    fn on_repair(&mut self, ws: WsId) {
        let now = self.clock;
        let w = &mut self.workstations[ws.0];
        w.available = true;
        w.unavailable_until = None;
        let suspended = w.suspended.take();
        self.record("repair", ws.to_string(), String::new());
        if let Some(job) = suspended {
            let w = &mut self.workstations[ws.0];
            w.current = Some(job);
            w.started_at = now;
            w.token += 1;
            let token = w.token;
            let remaining = {
                let j = &self.jobs[job.0];
                j.operations[j.next_op].remaining
            };
            self.events.push(now + remaining, EventKind::OperationComplete { ws, token });
            self.record("resume", ws.to_string(), format!("{job} remaining={remaining}"));
        } else {
            self.try_start(ws);
        }
    }

    // ---- energy ------------------------------------------------------

    /// Bills `dt` time units of class `class` to the vehicle, starting at its
    /// ledger cursor. Returns the percentage actually removed from the
    /// battery (clamped at empty).
    pub fn consume_energy(&mut self, aiv: AivId, dt: Time, class: LoadClass) -> f64 {
        let rates = &self.scenario.aiv().energy;
        let want = class.rate(rates) * dt.max(0.0);
        let a = &mut self.aivs[aiv.0];
        let start = a.segment_start;
        let used = if want > a.battery {
            let used = a.battery;
            a.battery = 0.0;
            self.diagnostics.push(Diagnostic::BatteryDepleted { aiv, time: start + dt });
            used
        } else {
            a.battery -= want;
            want
        };
        if class.is_moving() {
            a.busy_time += dt;
        }
        a.segment_start = start + dt;
        if dt > 0.0 {
            self.ledger.push(aiv.0, LedgerEntry { start, end: start + dt, class, pct: used });
        }
        used
    }

    fn close_segment(&mut self, a: usize) {
        let now = self.clock;
        let (start, class) = (self.aivs[a].segment_start, self.aivs[a].segment_class);
        if now > start {
            self.consume_energy(AivId(a), now - start, class);
        }
        self.aivs[a].segment_start = now;
    }

    fn set_segment(&mut self, a: usize, class: LoadClass) {
        self.close_segment(a);
        self.aivs[a].segment_class = class;
    }

    // ---- vehicles ----------------------------------------------------

    fn dispatch_idle(&mut self, a: usize) {
        if !matches!(self.aivs[a].errand, Errand::None) {
            return;
        }
        if let Some(st) = self.charging_policy_check(AivId(a)) {
            self.go_charge(a, st);
        } else if !self.aivs[a].pending.is_empty() {
            self.start_tour(a);
        }
    }

    /// Station the vehicle should head for, if its battery is strictly below
    /// the threshold: the nearest free station, else the nearest station's
    /// wait queue.
    pub fn charging_policy_check(&self, aiv: AivId) -> Option<StationId> {
        let a = &self.aivs[aiv.0];
        if a.battery >= self.scenario.aiv().charge_threshold {
            return None;
        }
        let here = a.position();
        let nearest = |free_only: bool| {
            self.chargers
                .iter()
                .filter(|c| !free_only || c.occupant.is_none())
                .min_by(|x, y| {
                    self.distance(here, x.node)
                        .total_cmp(&self.distance(here, y.node))
                        .then(x.id.cmp(&y.id))
                })
                .map(|c| c.id)
        };
        nearest(true).or_else(|| nearest(false))
    }

    fn go_charge(&mut self, a: usize, st: StationId) {
        let aiv = AivId(a);
        let c = &mut self.chargers[st.0];
        if c.occupant.is_none() {
            c.occupant = Some(aiv);
        } else {
            c.wait_queue.push_back(aiv);
        }
        let target = c.node;
        self.aivs[a].errand = Errand::ChargeTrip(st);
        self.record("to-charger", aiv.to_string(), format!("{st} battery={}", self.aivs[a].battery));
        let here = self.aivs[a].location;
        if here == target {
            self.arrive_at_charger(a, st);
            return;
        }
        self.depart(a, target, LoadClass::Moving(0), AivStatus::TravelingToCharge);
    }

    fn depart(&mut self, a: usize, to: NodeId, class: LoadClass, status: AivStatus) {
        self.set_segment(a, class);
        let now = self.clock;
        let from = self.aivs[a].location;
        let d = self.distance(from, to);
        let v = &mut self.aivs[a];
        v.status = status;
        v.leg = Some(Leg { from, to, depart: now, arrive: now + d });
        self.events.push(now + d, EventKind::AivArrive { aiv: AivId(a) });
        let (f, t) = (self.scenario.layout.node_name(from), self.scenario.layout.node_name(to));
        self.record("depart", AivId(a).to_string(), format!("{f}->{t} {class}"));
    }

    fn arrive_at_charger(&mut self, a: usize, st: StationId) {
        let aiv = AivId(a);
        if self.chargers[st.0].occupant == Some(aiv) {
            self.start_charging(a, st);
        } else {
            self.set_segment(a, LoadClass::NotMoving);
            self.aivs[a].status = AivStatus::WaitingForCharger;
            self.aivs[a].errand = Errand::WaitingAt(st);
            self.record("charger-wait", aiv.to_string(), st.to_string());
        }
    }

    fn start_charging(&mut self, a: usize, st: StationId) {
        self.set_segment(a, LoadClass::Charging);
        self.aivs[a].status = AivStatus::Charging;
        self.aivs[a].errand = Errand::Charging(st);
        let done = self.clock + self.scenario.aiv().recharge_duration;
        self.events.push(done, EventKind::ChargeComplete { aiv: AivId(a), station: st });
        self.record("charge-start", AivId(a).to_string(), format!("{st} battery={}", self.aivs[a].battery));
    }

    fn on_charge_complete(&mut self, aiv: AivId, st: StationId) {
        let a = aiv.0;
        self.set_segment(a, LoadClass::NotMoving);
        let before = self.aivs[a].battery;
        self.ledger.record_recharge(a, 100.0 - before);
        let v = &mut self.aivs[a];
        v.battery = 100.0;
        v.status = AivStatus::Idle;
        v.errand = Errand::None;
        self.record("charge-done", aiv.to_string(), format!("{st} from={before}"));

        let c = &mut self.chargers[st.0];
        c.occupant = None;
        if let Some(next) = c.wait_queue.pop_front() {
            c.occupant = Some(next);
            if self.aivs[next.0].errand == Errand::WaitingAt(st) {
                self.start_charging(next.0, st);
            }
        }
        self.dispatch_idle(a);
    }

    /// Takes up to `capacity` requests from the FIFO queue: all pickups in
    /// request order, then all deliveries in the same order.
    fn start_tour(&mut self, a: usize) {
        let v = &mut self.aivs[a];
        let k = v.capacity.min(v.pending.len());
        let reqs: Vec<TransportRequest> = v.pending.drain(..k).collect();
        let layout = &self.scenario.layout;
        let mut stops: VecDeque<Stop> = reqs
            .iter()
            .map(|r| Stop::Pickup { job: r.job, node: r.origin })
            .collect();
        stops.extend(reqs.iter().map(|r| Stop::Deliver {
            job: r.job,
            node: layout.ws_node(r.destination),
            ws: r.destination,
        }));
        v.errand = Errand::Tour(stops);
        let jobs: Vec<String> = reqs.iter().map(|r| r.job.to_string()).collect();
        self.record("tour", AivId(a).to_string(), jobs.join(","));
        self.next_leg(a);
    }

    /// Processes stops at the current node until a real leg is needed or the
    /// tour is finished.
    fn next_leg(&mut self, a: usize) {
        loop {
            let here = self.aivs[a].location;
            let next = match &self.aivs[a].errand {
                Errand::Tour(stops) => stops.front().copied(),
                _ => return,
            };
            let Some(stop) = next else {
                self.finish_tour(a);
                return;
            };
            if stop.node() == here {
                if let Errand::Tour(stops) = &mut self.aivs[a].errand {
                    stops.pop_front();
                }
                self.process_stop(a, stop);
                continue;
            }
            if let Stop::Pickup { job, .. } = stop {
                self.jobs[job.0].transfer_start = Some(self.clock);
            }
            let load = self.aivs[a].cargo.len();
            let status = if load == 0 { AivStatus::MovingEmpty } else { AivStatus::MovingLoaded };
            self.depart(a, stop.node(), LoadClass::Moving(load as u8), status);
            return;
        }
    }

    fn process_stop(&mut self, a: usize, stop: Stop) {
        let aiv = AivId(a);
        match stop {
            Stop::Pickup { job, .. } => {
                let j = &mut self.jobs[job.0];
                j.status = JobStatus::InTransit;
                j.location = JobLocation::Aboard(aiv);
                if j.transfer_start.is_none() {
                    j.transfer_start = Some(self.clock);
                }
                self.aivs[a].cargo.push(job);
                self.record("pickup", aiv.to_string(), job.to_string());
            }
            Stop::Deliver { job, node, ws } => {
                self.aivs[a].cargo.retain(|&c| c != job);
                let j = &mut self.jobs[job.0];
                j.status = JobStatus::QueuedAtWorkstation;
                j.location = JobLocation::Node(node);
                let start = j.transfer_start.unwrap_or(self.clock);
                self.workstations[ws.0].queue.push_back(job);
                self.notices.push_back(Notice::TransferCompleted {
                    job,
                    aiv,
                    start,
                    end: self.clock,
                });
                self.record("deliver", aiv.to_string(), format!("{job} to={ws}"));
                self.try_start(ws);
            }
        }
    }

    fn finish_tour(&mut self, a: usize) {
        self.set_segment(a, LoadClass::NotMoving);
        let v = &mut self.aivs[a];
        v.errand = Errand::None;
        v.status = AivStatus::Idle;
        v.leg = None;
        self.record("idle", AivId(a).to_string(), format!("battery={}", self.aivs[a].battery));
        self.dispatch_idle(a);
    }

    fn on_aiv_arrive(&mut self, aiv: AivId) -> Result<(), SimError> {
        let a = aiv.0;
        let leg = self.aivs[a]
            .leg
            .take()
            .ok_or_else(|| SimError::Corruption(format!("{aiv} arrived without a leg")))?;
        let class_now = self.aivs[a].segment_class;
        self.set_segment(a, class_now);
        self.aivs[a].location = leg.to;
        match self.aivs[a].errand.clone() {
            Errand::Tour(mut stops) => {
                let stop = stops
                    .pop_front()
                    .ok_or_else(|| SimError::Corruption(format!("{aiv} arrived with no stop")))?;
                self.aivs[a].errand = Errand::Tour(stops);
                self.process_stop(a, stop);
                self.next_leg(a);
            }
            Errand::ChargeTrip(st) => self.arrive_at_charger(a, st),
            other => {
                return Err(SimError::Corruption(format!("{aiv} arrived while {other:?}")));
            }
        }
        Ok(())
    }

    // ---- results -----------------------------------------------------

    pub fn metrics(&self) -> RunMetrics {
        let mut total_tardiness = 0.0;
        let mut n_tardy = 0;
        for j in &self.jobs {
            if let Some(c) = j.completion_time {
                let t = formulas::tardiness(c, j.due_date);
                total_tardiness += t;
                if t > 0.0 {
                    n_tardy += 1;
                }
            }
        }
        RunMetrics {
            total_tardiness,
            n_tardy,
            total_energy: self.ledger.total_all(),
            makespan: self.clock,
            completed: self.completed,
            recharges: (0..self.aivs.len()).map(|a| self.ledger.recharge_count(a)).sum(),
            depleted: self.diagnostics.iter().any(|d| matches!(d, Diagnostic::BatteryDepleted { .. })),
        }
    }
}
