use rand::Rng;

use super::MadqnError;

/// Replaces infeasible entries by `-inf`.
pub fn mask_q_values(q: &[f64], feasible: &[bool]) -> Result<Vec<f64>, MadqnError> {
    assert_eq!(q.len(), feasible.len(), "mask length mismatch");
    if !feasible.iter().any(|&f| f) {
        return Err(MadqnError::EmptyFeasibleSet);
    }
    Ok(q.iter()
        .zip(feasible)
        .map(|(&v, &ok)| if ok { v } else { f64::NEG_INFINITY })
        .collect())
}

/// Index of the largest value, lowest index on ties. NaN never wins.
pub fn argmax(q: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in q.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Epsilon-greedy over the feasible actions.
pub fn select_action<R: Rng + ?Sized>(
    q_masked: &[f64],
    feasible: &[bool],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, MadqnError> {
    let allowed: Vec<usize> = (0..feasible.len()).filter(|&i| feasible[i]).collect();
    if allowed.is_empty() {
        return Err(MadqnError::EmptyFeasibleSet);
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(allowed[rng.random_range(0..allowed.len())]);
    }
    // greedy over feasible entries only, so a row of NaN or -inf still
    // yields a legal action
    let mut best = allowed[0];
    for &i in &allowed[1..] {
        let (v, b) = (q_masked[i], q_masked[best]);
        if v > b || (b.is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    Ok(best)
}
