//! Physics-informed neural network training for the 1-D harmonic oscillator.
//!
//! The network `Φ(t; θ)` is trained so that `m Φ'' + k Φ = 0` holds at a set
//! of collocation points while matching the initial value and tangent at
//! `t = 0`. With few collocation points the optimizer tends to settle on the
//! trivial solution `Φ ≡ 0` for most of the domain. Two remedies are
//! provided: a penalty on the maximum squared time-derivative of the
//! residual, and equidistant grid sampling of the collocation points.

pub mod autodiff;
pub mod error;
pub mod exec;
pub mod network;

#[cfg(test)]
mod fd_oracle;

pub use autodiff::{Gradient, Jet3};
pub use error::{Error, Result};
pub use exec::Exec;
pub use network::Mlp;
pub mod loss;
pub mod optimizer;
pub mod physics;
pub mod sampling;
pub mod trainer;
pub mod cli;
pub mod study;
