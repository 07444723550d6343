//! Closed-form scheduling quantities: mean processing time, due dates,
//! current tardiness, lateness and the TD target. All generic over [`Scalar`].

use crate::Scalar;

/// Arithmetic mean of an operation's processing times over its eligible
/// workstations.
pub fn mean_processing_time<T: Scalar>(times: &[T]) -> T {
    assert!(!times.is_empty(), "operation has no eligible workstation");
    let sum = times.iter().fold(T::zero(), |acc, &t| acc + t);
    sum / T::of(times.len() as f64)
}

/// Clamps a due-date coefficient draw from below.
pub fn clamp_due_coefficient<T: Scalar>(draw: T, floor: T) -> T {
    if draw < floor {
        floor
    } else {
        draw
    }
}

/// `arrival + t * Σ mean_times`, summed left to right.
pub fn due_date<T: Scalar>(arrival: T, t: T, mean_times: &[T]) -> T {
    let total = mean_times.iter().fold(T::zero(), |acc, &m| acc + m);
    arrival + t * total
}

/// `max(0, k * rpt + now - due)`.
pub fn current_tardiness<T: Scalar>(k: T, rpt: T, now: T, due: T) -> T {
    let v = k * rpt + now - due;
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

pub fn lateness<T: Scalar>(completion: T, due: T) -> T {
    completion - due
}

pub fn tardiness<T: Scalar>(completion: T, due: T) -> T {
    lateness(completion, due).max(T::zero())
}

/// Negated lateness: positive for early jobs.
pub fn final_reward<T: Scalar>(completion: T, due: T) -> T {
    -lateness(completion, due)
}

/// `r` for terminal transitions, otherwise `r + gamma * max(q_next)` over the
/// (already masked) next-state values.
pub fn td_target<T: Scalar>(reward: T, q_next_masked: &[T], gamma: T, terminal: bool) -> T {
    if terminal {
        return reward;
    }
    let best = q_next_masked
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    reward + gamma * best
}
