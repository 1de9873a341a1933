//! Batched jet forward pass with a reverse sweep over the recorded layers.
//!
//! Activations of a batch of `P` points are stored as `width × 4P` matrices
//! whose columns are grouped by derivative order: columns `k·P .. (k+1)·P`
//! hold the `k`-th derivative of every point. Affine layers then act on all
//! four orders with a single matrix product, and only the order-0 block
//! receives the bias.
//!
//! The reverse sweep takes adjoints `∂L/∂Φ⁽ᵏ⁾(tᵢ)` for every output jet
//! component and returns `∂L/∂θ`, including the dependence of the input
//! derivatives on the parameters.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayViewMut2, Axis};

use super::{tanh_derivatives4, Gradient, Jet3};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::{Activation, Mlp};

/// Points per independently evaluated block.
pub const CHUNK_POINTS: usize = 32;

/// Recorded forward pass over one batch of input points.
#[derive(Debug, Clone)]
pub struct JetTape {
    points: usize,
    /// Input of each layer, `fan_in × 4P`.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer, `fan_out × 4P`.
    pre: Vec<Array2<f64>>,
}

fn seed_block(ts: &[f64]) -> Array2<f64> {
    let p = ts.len();
    let mut a = Array2::zeros((1, 4 * p));
    for (j, &t) in ts.iter().enumerate() {
        a[(0, j)] = t;
        a[(0, p + j)] = 1.0;
    }
    a
}

fn tanh_forward(z: &Array2<f64>, p: usize) -> Array2<f64> {
    let mut out = Array2::zeros(z.raw_dim());
    for (zr, mut or) in z.outer_iter().zip(out.outer_iter_mut()) {
        for j in 0..p {
            let a = Jet3::new(zr[j], zr[p + j], zr[2 * p + j], zr[3 * p + j]).tanh();
            or[j] = a.d0;
            or[p + j] = a.d1;
            or[2 * p + j] = a.d2;
            or[3 * p + j] = a.d3;
        }
    }
    out
}

/// Pulls output adjoints of `tanh` back to its input jet.
fn tanh_backward(z: &Array2<f64>, g: &mut Array2<f64>, p: usize) {
    for (zr, mut gr) in z.outer_iter().zip(g.outer_iter_mut()) {
        for j in 0..p {
            let [_, f1, f2, f3, f4] = tanh_derivatives4(zr[j]);
            let (a1, a2, a3) = (zr[p + j], zr[2 * p + j], zr[3 * p + j]);
            let (g0, g1, g2, g3) = (gr[j], gr[p + j], gr[2 * p + j], gr[3 * p + j]);
            gr[j] = g0 * f1
                + g1 * f2 * a1
                + g2 * (f3 * a1 * a1 + f2 * a2)
                + g3 * (f4 * a1 * a1 * a1 + 3.0 * f3 * a1 * a2 + f2 * a3);
            gr[p + j] = g1 * f1 + 2.0 * g2 * f2 * a1 + g3 * (3.0 * f3 * a1 * a1 + 3.0 * f2 * a2);
            gr[2 * p + j] = g2 * f1 + 3.0 * g3 * f2 * a1;
            gr[3 * p + j] = g3 * f1;
        }
    }
}

impl JetTape {
    /// Forward pass of `ts` through `mlp`, returning output jets in input order.
    pub fn record(mlp: &Mlp, ts: &[f64]) -> (Vec<Jet3>, Self) {
        let p = ts.len();
        let layers = mlp.num_layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        let mut a = seed_block(ts);
        for l in 0..layers {
            let (w, b) = mlp.layer(l);
            let mut z = Array2::zeros((w.nrows(), 4 * p));
            general_mat_mul(1.0, &w, &a, 0.0, &mut z);
            z.slice_mut(s![.., 0..p]).outer_iter_mut().zip(b.iter()).for_each(|(mut row, bi)| {
                row += *bi;
            });
            let next = if l + 1 < layers && mlp.hidden_activation() == Activation::Tanh {
                tanh_forward(&z, p)
            } else {
                z.clone()
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let out = (0..p).map(|j| Jet3::new(a[(0, j)], a[(0, p + j)], a[(0, 2 * p + j)], a[(0, 3 * p + j)])).collect();
        (out, JetTape { points: p, inputs, pre })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂(output jet)` per point.
    pub fn backward(&self, mlp: &Mlp, adjoints: &[Jet3], grad: &mut [f64]) {
        let p = self.points;
        assert_eq!(adjoints.len(), p, "one adjoint per recorded point");
        assert_eq!(grad.len(), mlp.num_params());
        let layers = mlp.num_layers();

        let mut g = Array2::zeros((1, 4 * p));
        for (j, adj) in adjoints.iter().enumerate() {
            for (k, v) in adj.as_array().into_iter().enumerate() {
                g[(0, k * p + j)] = v;
            }
        }
        for l in (0..layers).rev() {
            if l + 1 < layers && mlp.hidden_activation() == Activation::Tanh {
                tanh_backward(&self.pre[l], &mut g, p);
            }
            let slot = mlp.slot(l);
            let (w, _) = mlp.layer(l);
            {
                let (wslice, rest) = grad[slot.weights..].split_at_mut(slot.fan_in * slot.fan_out);
                let mut dw = ArrayViewMut2::from_shape((slot.fan_out, slot.fan_in), wslice)
                    .expect("weight gradient block");
                general_mat_mul(1.0, &g, &self.inputs[l].t(), 1.0, &mut dw);
                let db = &mut rest[..slot.fan_out];
                for (dbi, row) in db.iter_mut().zip(g.slice(s![.., 0..p]).axis_iter(Axis(0))) {
                    *dbi += row.sum();
                }
            }
            if l > 0 {
                let mut gin = Array2::zeros((slot.fan_in, 4 * p));
                general_mat_mul(1.0, &w.t(), &g, 0.0, &mut gin);
                g = gin;
            }
        }
    }
}

/// Batched forward pass without gradient bookkeeping beyond the tape.
pub fn forward_batch(mlp: &Mlp, ts: &[f64]) -> Result<Vec<Jet3>> {
    let out: Vec<Jet3> = ts
        .chunks(CHUNK_POINTS.max(1))
        .flat_map(|c| JetTape::record(mlp, c).0)
        .collect();
    if out.iter().all(Jet3::is_finite) {
        Ok(out)
    } else {
        Err(Error::NonFinite("network output"))
    }
}

/// Evaluates a loss defined on the output jets at `inputs` and its exact
/// gradient with respect to every network parameter.
///
/// `loss` receives the output jets (in input order) and returns its value
/// together with `∂loss/∂(d0, d1, d2, d3)` for each jet. Points are
/// processed in blocks of [`CHUNK_POINTS`]; block gradients are summed in
/// block order, so the result does not depend on `exec`.
pub fn param_gradient<T, F>(mlp: &Mlp, inputs: &[f64], exec: Exec, loss: F) -> Result<(T, Gradient)>
where
    F: FnOnce(&[Jet3]) -> Result<(T, Vec<Jet3>)>,
{
    let chunks: Vec<&[f64]> = inputs.chunks(CHUNK_POINTS.max(1)).collect();
    let recorded = exec.map(&chunks, |c| JetTape::record(mlp, c));
    let outputs: Vec<Jet3> = recorded.iter().flat_map(|(o, _)| o.iter().copied()).collect();
    if !outputs.iter().all(Jet3::is_finite) {
        return Err(Error::NonFinite("network output"));
    }
    let (value, adjoints) = loss(&outputs)?;
    if adjoints.len() != outputs.len() {
        return Err(Error::DimensionMismatch { expected: outputs.len(), found: adjoints.len() });
    }

    let mut work = Vec::with_capacity(recorded.len());
    let mut start = 0;
    for (_, tape) in &recorded {
        work.push((tape, &adjoints[start..start + tape.points()]));
        start += tape.points();
    }
    let n = mlp.num_params();
    let partials = exec.map(&work, |(tape, adj)| {
        let mut g = vec![0.0; n];
        tape.backward(mlp, adj, &mut g);
        g
    });
    let mut grad = Gradient::zeros(n);
    for part in partials {
        for (acc, v) in grad.0.iter_mut().zip(part) {
            *acc += v;
        }
    }
    grad.check_finite()?;
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd_oracle as fd;

    fn objective(out: &[Jet3]) -> Result<(f64, Vec<Jet3>)> {
        // Σ (d0² + 0.5 d1² + 0.3 d2 d0 + d3²/4)
        let mut v = 0.0;
        let adj = out
            .iter()
            .map(|j| {
                v += j.d0 * j.d0 + 0.5 * j.d1 * j.d1 + 0.3 * j.d2 * j.d0 + 0.25 * j.d3 * j.d3;
                Jet3::new(2.0 * j.d0 + 0.3 * j.d2, j.d1, 0.3 * j.d0, 0.5 * j.d3)
            })
            .collect();
        Ok((v, adj))
    }

    fn objective_value(net: &Mlp, ts: &[f64]) -> f64 {
        let outs: Vec<Jet3> = ts.iter().map(|&t| net.forward_jet(Jet3::seed(t)).unwrap()).collect();
        objective(&outs).unwrap().0
    }

    #[test]
    fn batch_matches_pointwise_jets() {
        let net = Mlp::init(&[1, 6, 5, 1], 3).unwrap();
        let ts: Vec<f64> = (0..70).map(|i| i as f64 * 0.13 - 2.0).collect();
        let batch = forward_batch(&net, &ts).unwrap();
        for (t, j) in ts.iter().zip(&batch) {
            let single = net.forward_jet(Jet3::seed(*t)).unwrap();
            for (a, b) in j.as_array().iter().zip(single.as_array()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ts = [0.0, 0.4, 0.7, 1.9];
        for seed in 0..4 {
            let net = Mlp::init(&[1, 4, 3, 1], seed).unwrap();
            let (v, g) = param_gradient(&net, &ts, Exec::Sequential, objective).unwrap();
            assert!((v - objective_value(&net, &ts)).abs() < 1e-12 * (1.0 + v.abs()));
            let numeric = fd::gradient(
                |p| objective_value(&Mlp::from_params(net.layer_sizes(), p.to_vec()).unwrap(), &ts),
                net.params(),
                1e-5,
            );
            for (i, (a, b)) in g.as_slice().iter().zip(&numeric).enumerate() {
                assert!(fd::within(*a, *b, 1e-5, 1e-8), "param {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let net = Mlp::init(&[1, 4, 1], 1).unwrap();
        let (_, g) = param_gradient(&net, &[0.1, 0.2], Exec::Sequential, |o| {
            Ok((3.0, vec![Jet3::ZERO; o.len()]))
        })
        .unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn output_bias_gradient_of_squared_value() {
        // Φ(0)² with zero weights and output bias b: ∂/∂b = 2b
        let mut net = Mlp::zeros(&[1, 3, 1]).unwrap();
        let n = net.num_params();
        net.params_mut()[n - 1] = 0.8;
        let (_, g) = param_gradient(&net, &[0.0], Exec::Sequential, |o| {
            Ok((o[0].d0 * o[0].d0, vec![Jet3::new(2.0 * o[0].d0, 0.0, 0.0, 0.0)]))
        })
        .unwrap();
        assert!((g.as_slice()[n - 1] - 1.6).abs() < 1e-15);
        assert!(g.as_slice()[..n - 4].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn chunked_gradient_independent_of_exec() {
        let net = Mlp::init(&[1, 8, 8, 1], 5).unwrap();
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 0.2).collect();
        let a = param_gradient(&net, &ts, Exec::Sequential, objective).unwrap();
        let b = param_gradient(&net, &ts, Exec::Parallel, objective).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
