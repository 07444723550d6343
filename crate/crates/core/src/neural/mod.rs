//! Fully connected Tanh network whose hidden layers also read the same-layer
//! activations of peer agents (the communication channel).
//!
//! Every hidden layer `l` computes
//! `h_out = tanh(W · [h_in ; peer_1 ; … ; peer_K] + b)` where each peer slot is
//! a hidden-width vector (zero when unused). The output layer is affine.
//! Peer activations are treated as constants when differentiating.

mod network;

use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};
use thiserror::Error;

pub use network::{Architecture, CommBundle, ForwardTrace, Gradients, Layer, LbccNetwork};

use crate::Scalar;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Mean of squared differences.
pub fn mse_loss<T: Scalar>(pred: &[T], target: &[T]) -> T {
    assert_eq!(pred.len(), target.len(), "mse_loss length mismatch");
    if pred.is_empty() {
        return T::zero();
    }
    let sum = pred
        .iter()
        .zip(target)
        .fold(T::zero(), |acc, (&p, &t)| acc + (p - t) * (p - t));
    sum / T::of(pred.len() as f64)
}

/// `d mse / d pred = 2 (pred - target) / N`.
pub fn mse_grad<T: Scalar>(pred: &[T], target: &[T]) -> Vec<T> {
    assert_eq!(pred.len(), target.len(), "mse_grad length mismatch");
    let n = T::of(pred.len() as f64);
    let two = T::of(2.0);
    pred.iter().zip(target).map(|(&p, &t)| two * (p - t) / n).collect()
}

pub fn save_json<V: Serialize>(value: &V, path: impl AsRef<Path>) -> Result<(), NeuralError> {
    let path = path.as_ref();
    let text = serde_json::to_string(value).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    std::fs::write(path, text)
        .map_err(|e| NeuralError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V, NeuralError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| NeuralError::Checkpoint(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| NeuralError::Checkpoint(format!("{}: {e}", path.display())))
}
