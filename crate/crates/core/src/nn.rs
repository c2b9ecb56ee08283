//! Dense feed-forward networks with hand-written backpropagation, and the
//! adaptive-moment optimizer used by both learners.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `out x in`) followed by the bias vector. Gradients use the
//! same layout, which keeps the optimizer, soft target updates, finite
//! difference checks and checkpoints trivial.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Post-activation outputs of every layer from one forward pass;
/// `acts[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Network with every parameter drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self { sizes: sizes.to_vec(), hidden, output, params }
    }

    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params: vec![0.0; param_count(sizes)],
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> Activation {
        self.output
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

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.sizes == other.sizes && self.hidden == other.hidden && self.output == other.output
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = Trace::default();
        self.forward_trace(input, &mut trace)?;
        Ok(trace.acts.pop().unwrap())
    }

    /// Forward pass keeping every layer's output for [`Mlp::backward`].
    pub fn forward_trace(&self, input: &[f64], trace: &mut Trace) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape { expected: self.input_dim(), got: input.len() });
        }
        let layers = self.sizes.len() - 1;
        trace.acts.resize_with(layers + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(input);
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let weights = &self.params[off..off + n_in * n_out];
            let biases = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let act = self.activation(l);
            let (prev, rest) = trace.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut rest[0];
            y.clear();
            for (row, b) in weights.chunks_exact(n_in).zip(biases) {
                let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                y.push(act.apply(z));
            }
        }
        Ok(())
    }

    /// Backpropagates `d_output` (gradient of a scalar w.r.t. the network
    /// output) through a recorded pass. Parameter gradients are accumulated
    /// into `grads` when given; the input gradient is written to `d_input`
    /// when given.
    pub fn backward(
        &self,
        trace: &Trace,
        d_output: &[f64],
        mut grads: Option<&mut [f64]>,
        d_input: Option<&mut Vec<f64>>,
    ) {
        let layers = self.sizes.len() - 1;
        assert_eq!(d_output.len(), self.output_dim());
        if let Some(g) = grads.as_deref() {
            assert_eq!(g.len(), self.params.len());
        }
        let out_act = self.activation(layers - 1);
        let mut delta: Vec<f64> = d_output
            .iter()
            .zip(&trace.acts[layers])
            .map(|(d, y)| d * out_act.derivative_from_output(*y))
            .collect();
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let want_input = d_input.is_some();
        let mut prev_delta = Vec::new();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &trace.acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = g[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for ((row, gbi), &d) in gw.chunks_exact_mut(n_in).zip(gb.iter_mut()).zip(&delta) {
                    if d != 0.0 {
                        for (gij, xj) in row.iter_mut().zip(x) {
                            *gij += d * xj;
                        }
                        *gbi += d;
                    }
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let weights = &self.params[off..off + n_in * n_out];
            prev_delta.clear();
            prev_delta.resize(n_in, 0.0);
            for (row, &d) in weights.chunks_exact(n_in).zip(&delta) {
                if d != 0.0 {
                    for (p, w) in prev_delta.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
            }
            if l > 0 {
                let act = self.activation(l - 1);
                for (p, y) in prev_delta.iter_mut().zip(x) {
                    *p *= act.derivative_from_output(*y);
                }
            }
            std::mem::swap(&mut delta, &mut prev_delta);
        }
        if let Some(out) = d_input {
            out.clear();
            out.extend_from_slice(&delta);
        }
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn blend_from(&mut self, source: &Mlp, tau: f64) {
        debug_assert!(self.same_shape(source));
        if tau == 1.0 {
            return self.copy_from(source);
        }
        // incremental form keeps `self == source` an exact fixed point
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t += tau * (s - *t);
        }
    }

    pub fn copy_from(&mut self, source: &Mlp) {
        self.params.copy_from_slice(&source.params);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Adaptive moments.
    Adam,
    /// Plain gradient descent, `theta <- theta - lr * g`.
    Sgd,
}

/// Gradient-descent optimizer with Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient; 0 disables it.
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(kind: OptimizerKind, lr: f64, num_params: usize) -> Self {
        Self {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step on `params` for the loss gradient `grads`.
    /// Fails without touching `params` if any gradient is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> std::result::Result<(), String> {
        assert_eq!(params.len(), grads.len());
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(format!("non-finite gradient at parameter {i}: {}", grads[i]));
        }
        let wd = self.weight_decay;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * (g + wd * *p);
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let bc1 = 1.0 - self.beta1.powi(self.t as i32);
                let bc2 = 1.0 - self.beta2.powi(self.t as i32);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    let g = g + wd * *p;
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                }
            }
        }
        Ok(())
    }
}
