//! Forward jets in the time input and exact parameter gradients through them.

mod jet;
mod tape;

pub use jet::{tanh_derivatives, tanh_derivatives4, Jet3};
pub use tape::{forward_batch, param_gradient, JetTape, CHUNK_POINTS};

use crate::error::{Error, Result};

/// `∂loss/∂θ` in the flat parameter ordering of [`Mlp`](crate::Mlp).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn zeros(len: usize) -> Self {
        Gradient(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.0.iter().all(|g| g.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("parameter gradient"))
        }
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}
