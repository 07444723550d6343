use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{AivId, JobId, StationId, Time, WsId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    OperationComplete { ws: WsId, token: u64 },
    AivArrive { aiv: AivId },
    ChargeComplete { aiv: AivId, station: StationId },
    Repair { ws: WsId },
    Breakdown { ws: WsId, duration_bits: u64 },
    JobArrival { job: JobId },
    Decision { job: JobId },
}

impl EventKind {
    /// Tie-break class for equal timestamps: completions, then repairs,
    /// then new unavailabilities, arrivals, and finally decisions.
    pub fn priority(&self) -> u8 {
        match self {
            EventKind::OperationComplete { .. }
            | EventKind::AivArrive { .. }
            | EventKind::ChargeComplete { .. } => 0,
            EventKind::Repair { .. } => 1,
            EventKind::Breakdown { .. } => 2,
            EventKind::JobArrival { .. } => 3,
            EventKind::Decision { .. } => 4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EventKind::OperationComplete { .. } => "op-complete",
            EventKind::AivArrive { .. } => "aiv-arrive",
            EventKind::ChargeComplete { .. } => "charge-complete",
            EventKind::Repair { .. } => "repair",
            EventKind::Breakdown { .. } => "breakdown",
            EventKind::JobArrival { .. } => "arrival",
            EventKind::Decision { .. } => "decision",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: Time,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (Time, u8, u64) {
        (self.time, self.kind.priority(), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, pa, sa) = self.key();
        let (tb, pb, sb) = other.key();
        tb.total_cmp(&ta).then(pb.cmp(&pa)).then(sb.cmp(&sa))
    }
}

/// Min-queue on `(time, priority, insertion order)`.
#[derive(Debug, Default, Clone)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: Time, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<Time> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
