use std::collections::VecDeque;

use crate::model::{AivId, JobId, NodeId, StationId, Time, WsId};

use super::energy::LoadClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    NotArrived,
    WaitingForTransport,
    InTransit,
    QueuedAtWorkstation,
    Processing,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobLocation {
    Outside,
    Node(NodeId),
    Aboard(AivId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub eligible: Vec<WsId>,
    /// Parallel to `eligible`.
    pub processing_time: Vec<Time>,
    pub assigned: Option<WsId>,
    pub remaining: Time,
}

impl Operation {
    pub fn time_on(&self, ws: WsId) -> Option<Time> {
        self.eligible
            .iter()
            .position(|&w| w == ws)
            .map(|i| self.processing_time[i])
    }

    pub fn mean_time(&self) -> Time {
        crate::formulas::mean_processing_time(&self.processing_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: JobId,
    pub product: usize,
    pub arrival: Time,
    pub due_date: Time,
    pub operations: Vec<Operation>,
    pub next_op: usize,
    pub status: JobStatus,
    pub completion_time: Option<Time>,
    pub location: JobLocation,
    /// Set between arrival/operation completion and the policy's decision.
    pub awaiting_decision: bool,
    /// Vehicle carrying (or about to carry) the current transfer.
    pub carrier: Option<AivId>,
    /// When the carrier started heading for this job's pickup node.
    pub transfer_start: Option<Time>,
}

impl Job {
    pub fn current_operation(&self) -> Option<&Operation> {
        self.operations.get(self.next_op)
    }

    /// Sum of mean processing times of the not-yet-completed operations.
    pub fn remaining_mean_time(&self) -> Time {
        self.operations[self.next_op.min(self.operations.len())..]
            .iter()
            .map(Operation::mean_time)
            .sum()
    }

    pub fn is_active(&self) -> bool {
        !matches!(self.status, JobStatus::NotArrived | JobStatus::Completed)
    }

    pub fn node(&self) -> Option<NodeId> {
        match self.location {
            JobLocation::Node(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workstation {
    pub id: WsId,
    pub queue: VecDeque<JobId>,
    pub busy_time: Time,
    pub available: bool,
    pub current: Option<JobId>,
    /// Job whose processing was interrupted by an unavailability.
    pub suspended: Option<JobId>,
    pub unavailable_until: Option<Time>,
    pub(crate) started_at: Time,
    pub(crate) token: u64,
}

impl Workstation {
    pub(crate) fn new(id: WsId) -> Self {
        Self {
            id,
            queue: VecDeque::new(),
            busy_time: 0.0,
            available: true,
            current: None,
            suspended: None,
            unavailable_until: None,
            started_at: 0.0,
            token: 0,
        }
    }

    /// Busy time including the in-progress operation.
    pub fn busy_time_at(&self, now: Time) -> Time {
        match self.current {
            Some(_) => self.busy_time + (now - self.started_at),
            None => self.busy_time,
        }
    }

    /// Fraction of elapsed time spent processing, in `[0, 1]`.
    pub fn busy_fraction(&self, now: Time) -> f64 {
        self.busy_time_at(now) / now.max(1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AivStatus {
    Idle,
    MovingEmpty,
    MovingLoaded,
    TravelingToCharge,
    WaitingForCharger,
    Charging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportRequest {
    pub job: JobId,
    pub origin: NodeId,
    pub destination: WsId,
    pub request_time: Time,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    Pickup { job: JobId, node: NodeId },
    Deliver { job: JobId, node: NodeId, ws: WsId },
}

impl Stop {
    pub(crate) fn node(&self) -> NodeId {
        match *self {
            Stop::Pickup { node, .. } | Stop::Deliver { node, .. } => node,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Errand {
    None,
    Tour(VecDeque<Stop>),
    ChargeTrip(StationId),
    WaitingAt(StationId),
    Charging(StationId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub from: NodeId,
    pub to: NodeId,
    pub depart: Time,
    pub arrive: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aiv {
    pub id: AivId,
    pub battery: f64,
    pub capacity: usize,
    pub cargo: Vec<JobId>,
    pub pending: VecDeque<TransportRequest>,
    pub location: NodeId,
    pub status: AivStatus,
    pub busy_time: Time,
    pub leg: Option<Leg>,
    pub(crate) errand: Errand,
    pub(crate) segment_start: Time,
    pub(crate) segment_class: LoadClass,
}

impl Aiv {
    /// Node the vehicle is at, or heading to while moving.
    pub fn position(&self) -> NodeId {
        self.leg.map_or(self.location, |l| l.to)
    }

    /// Outstanding transfers: queued requests plus undelivered ones of the
    /// current tour.
    pub fn queue_len(&self) -> usize {
        let in_tour = match &self.errand {
            Errand::Tour(stops) => stops.iter().filter(|s| matches!(s, Stop::Deliver { .. })).count(),
            _ => 0,
        };
        self.pending.len() + in_tour
    }

    pub fn busy_time_at(&self, now: Time) -> Time {
        if self.segment_class.is_moving() {
            self.busy_time + (now - self.segment_start)
        } else {
            self.busy_time
        }
    }

    pub fn busy_fraction(&self, now: Time) -> f64 {
        self.busy_time_at(now) / now.max(1e-9)
    }

    pub fn on_tour(&self) -> bool {
        matches!(self.errand, Errand::Tour(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingStation {
    pub id: StationId,
    pub node: NodeId,
    pub occupant: Option<AivId>,
    pub wait_queue: VecDeque<AivId>,
}
