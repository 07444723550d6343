//! Simulation and scheduling for a dynamic flexible job shop whose transfers
//! are carried out by battery-powered autonomous vehicles (AIVs).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] and [`scenario`] describe problem instances and generate them
//!   from seeded random streams.
//! * [`sim`] is the discrete-event engine: job lifecycle, FIFO queues, tours,
//!   battery accounting, charging and workstation unavailability.
//! * [`heuristics`] holds the nine dispatching-rule baselines.
//! * [`neural`] is a small from-scratch MLP with a layer-based communication
//!   channel between agents, written generically over the [`Scalar`] type.
//! * [`madqn`] builds observations, rewards and the multi-agent DQN loop.
//! * [`bench`] runs paired replications and summarises/export results.

pub mod bench;
pub mod formulas;
pub mod heuristics;
pub mod madqn;
pub mod model;
pub mod neural;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod sim;

pub use scalar::Scalar;

/// Double-precision communication-channel network used by the scheduler.
pub type LbccNet = neural::LbccNetwork<f64>;
/// Single-precision variant, handy for inference on a frozen snapshot.
pub type LbccNetF32 = neural::LbccNetwork<f32>;
/// Double-precision forward trace.
pub type Trace = neural::ForwardTrace<f64>;
/// Double-precision peer-activation bundle.
pub type Comm = neural::CommBundle<f64>;
/// Double-precision gradients.
pub type Grads = neural::Gradients<f64>;
