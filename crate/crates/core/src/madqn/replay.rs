use std::collections::VecDeque;

use rand::Rng;

use crate::neural::CommBundle;

/// One transition of one agent for one decision type.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub obs: Vec<f64>,
    pub comm: CommBundle<f64>,
    pub action: usize,
    /// Feasible set of `obs`; `action` is always inside it.
    pub mask: Vec<bool>,
    pub reward: f64,
    /// Next decision of the same agent and type; absent when terminal.
    pub next: Option<NextState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NextState {
    pub obs: Vec<f64>,
    pub comm: CommBundle<f64>,
    pub mask: Vec<bool>,
}

impl Experience {
    pub fn terminal(&self) -> bool {
        self.next.is_none()
    }
}

/// Bounded FIFO; the oldest experience is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1024)) }
    }

    pub fn push(&mut self, e: Experience) {
        debug_assert!(e.mask[e.action], "stored action outside its mask");
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}
