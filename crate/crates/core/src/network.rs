//! Fully connected feed-forward network `Φ(t; θ)` with scalar input and
//! output.
//!
//! All parameters live in one flat vector, ordered layer by layer with each
//! layer's weight matrix (row-major, `out × in`) followed by its bias. The
//! [`Gradient`](crate::autodiff::Gradient) uses the same ordering, so the
//! optimizer can treat both as plain slices.

use ndarray::{ArrayView1, ArrayView2};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Jet3;
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always affine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn apply_jet(self, x: Jet3) -> Jet3 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

/// Parameter initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Weights uniform on `±√(6 / (fan_in + fan_out))`, biases zero.
    #[default]
    Glorot,
    /// Weights and biases uniform on `±1/√fan_in`.
    FanIn,
}

/// Eight hidden layers of width 20 between a scalar input and output.
pub const DEFAULT_LAYER_SIZES: [usize; 10] = [1, 20, 20, 20, 20, 20, 20, 20, 20, 1];

/// Checkpoints serialize as `{layer_sizes, hidden_activation, params}` with
/// the flat parameter vector; loading validates the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr")]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    params: Vec<f64>,
}

#[derive(Deserialize)]
struct MlpRepr {
    layer_sizes: Vec<usize>,
    #[serde(default)]
    hidden_activation: Activation,
    params: Vec<f64>,
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = Error;

    fn try_from(r: MlpRepr) -> Result<Self> {
        Ok(Mlp::from_params(&r.layer_sizes, r.params)?.with_hidden_activation(r.hidden_activation))
    }
}

/// Offsets of one layer's weights and biases inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub bias: usize,
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::config("layer_sizes needs at least an input and an output"));
    }
    if layer_sizes[0] != 1 || *layer_sizes.last().unwrap() != 1 {
        return Err(Error::config("first and last layer sizes must be 1"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::config("layer sizes must be positive"));
    }
    Ok(())
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        Self::init_with(layer_sizes, seed, InitScheme::Glorot)
    }

    pub fn init_with(layer_sizes: &[usize], seed: u64, scheme: InitScheme) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            match scheme {
                InitScheme::Glorot => {
                    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound);
                    params.extend((0..fan_in * fan_out).map(|_| dist.sample(&mut rng)));
                    params.extend(std::iter::repeat_n(0.0, fan_out));
                }
                InitScheme::FanIn => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound);
                    params.extend((0..fan_in * fan_out + fan_out).map(|_| dist.sample(&mut rng)));
                }
            }
        }
        Ok(Self { layer_sizes: layer_sizes.to_vec(), hidden_activation: Activation::Tanh, params })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        Self::from_params(layer_sizes, vec![0.0; param_count(layer_sizes)])
    }

    pub fn from_params(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let want = param_count(layer_sizes);
        if params.len() != want {
            return Err(Error::DimensionMismatch { expected: want, found: params.len() });
        }
        Ok(Self { layer_sizes: layer_sizes.to_vec(), hidden_activation: Activation::Tanh, params })
    }

    pub fn with_hidden_activation(mut self, activation: Activation) -> Self {
        self.hidden_activation = activation;
        self
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn slots(&self) -> impl Iterator<Item = LayerSlot> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let slot = LayerSlot {
                fan_in: w[0],
                fan_out: w[1],
                weights: offset,
                bias: offset + w[0] * w[1],
            };
            offset = slot.bias + w[1];
            slot
        })
    }

    pub(crate) fn slot(&self, layer: usize) -> LayerSlot {
        self.slots().nth(layer).expect("layer index in range")
    }

    /// Weight matrix (`out × in`) and bias of `layer`.
    pub fn layer(&self, layer: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let s = self.slot(layer);
        let w = ArrayView2::from_shape(
            (s.fan_out, s.fan_in),
            &self.params[s.weights..s.weights + s.fan_in * s.fan_out],
        )
        .expect("weight block matches layer shape");
        let b = ArrayView1::from(&self.params[s.bias..s.bias + s.fan_out]);
        (w, b)
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            Activation::Identity
        } else {
            self.hidden_activation
        }
    }

    /// Plain scalar forward pass.
    pub fn forward(&self, t: f64) -> f64 {
        let mut x = vec![t];
        for (l, s) in self.slots().enumerate() {
            let act = self.activation_for(l);
            let w = &self.params[s.weights..s.bias];
            let b = &self.params[s.bias..s.bias + s.fan_out];
            x = (0..s.fan_out)
                .map(|i| {
                    let row = &w[i * s.fan_in..(i + 1) * s.fan_in];
                    act.apply(row.iter().zip(&x).map(|(wij, xj)| wij * xj).sum::<f64>() + b[i])
                })
                .collect();
        }
        x[0]
    }

    /// Jet of `Φ` at the input jet `t`.
    pub fn forward_jet(&self, t: Jet3) -> Result<Jet3> {
        let mut x = vec![t];
        for (l, s) in self.slots().enumerate() {
            let act = self.activation_for(l);
            let w = &self.params[s.weights..s.bias];
            let b = &self.params[s.bias..s.bias + s.fan_out];
            x = (0..s.fan_out)
                .map(|i| {
                    let row = &w[i * s.fan_in..(i + 1) * s.fan_in];
                    let z = row.iter().zip(&x).fold(Jet3::constant(b[i]), |acc, (wij, xj)| {
                        acc + xj.scale(*wij)
                    });
                    act.apply_jet(z)
                })
                .collect();
        }
        let out = x[0];
        if !out.is_finite() {
            return Err(Error::NonFinite("network output"));
        }
        Ok(out)
    }
}
