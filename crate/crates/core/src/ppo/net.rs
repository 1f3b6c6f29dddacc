// SPDX-License-Identifier: Apache-2.0

//! Fully connected networks with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

/// `y = act(W·x + b)`, `W` row-major `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

/// Layer inputs and outputs from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    pub acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace has an input")
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl DenseNet {
    /// Builds a network with layer widths `sizes`, `hidden` activation between layers
    /// and `output` activation at the end. Weights are uniform in
    /// `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Result<Self, ModelError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(ModelError::Config("network needs at least two nonzero layer widths".into()));
        }
        if hidden == Activation::Softmax {
            return Err(ModelError::Config("softmax is only allowed on the output layer".into()));
        }
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    activation: if i + 2 == sizes.len() { output } else { hidden },
                    weights: (0..n_in * n_out).map(|_| rng.gen_range(-limit..=limit)).collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers.is_empty() {
            return Err(ModelError::Config("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(ModelError::Config(format!("layer {i} has inconsistent parameter shapes")));
            }
            if i > 0 && self.layers[i - 1].n_out != l.n_in {
                return Err(ModelError::Config(format!("layer {i} input does not chain")));
            }
            if l.activation == Activation::Softmax && i + 1 != self.layers.len() {
                return Err(ModelError::Config("softmax is only allowed on the output layer".into()));
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("nonempty").n_out
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace, ModelError> {
        if x.len() != self.n_inputs() {
            return Err(ModelError::Config(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.n_inputs()
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for l in &self.layers {
            let input = acts.last().expect("nonempty");
            let mut z = l.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &l.weights[o * l.n_in..(o + 1) * l.n_in];
                *zo += row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
            }
            let y = match l.activation {
                Activation::Relu => z.into_iter().map(|v| v.max(0.0)).collect(),
                Activation::Identity => z,
                Activation::Softmax => softmax(&z),
            };
            acts.push(y);
        }
        Ok(Trace { acts })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.trace(x)?.acts.pop().expect("nonempty"))
    }

    /// Accumulates `scale · ∂L/∂θ` into `grad` (flat, in [`DenseNet::params`] order),
    /// given `∂L/∂y` for the network output `y`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], scale: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.n_params());
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        let mut dy = d_out.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let y = &trace.acts[i + 1];
            let x = &trace.acts[i];
            let dz: Vec<f64> = match l.activation {
                Activation::Relu => dy.iter().zip(y).map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }).collect(),
                Activation::Identity => dy,
                Activation::Softmax => {
                    let dot: f64 = dy.iter().zip(y).map(|(g, v)| g * v).sum();
                    dy.iter().zip(y).map(|(g, v)| v * (g - dot)).collect()
                }
            };
            let o = offsets[i];
            let (gw, gb) = grad[o..o + l.weights.len() + l.bias.len()].split_at_mut(l.weights.len());
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[r] += scale * d;
                for (gwi, xv) in gw[r * l.n_in..(r + 1) * l.n_in].iter_mut().zip(x) {
                    *gwi += scale * d * xv;
                }
            }
            if i > 0 {
                let mut dx = vec![0.0; l.n_in];
                for (r, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (dxi, w) in dx.iter_mut().zip(&l.weights[r * l.n_in..(r + 1) * l.n_in]) {
                        *dxi += d * w;
                    }
                }
                dy = dx;
            } else {
                break;
            }
        }
    }

    /// All parameters: each layer's weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), ModelError> {
        if p.len() != self.n_params() {
            return Err(ModelError::Config("parameter vector length mismatch".into()));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Adds `delta` to the parameters.
    pub fn apply_delta(&mut self, delta: &[f64]) {
        let mut off = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w += delta[off];
                off += 1;
            }
        }
    }
}
