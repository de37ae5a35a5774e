//! Single-hidden-layer perceptron with ReLU hidden units and a sigmoid or
//! softmax output.
//!
//! Parameters live in one flat `f64` vector laid out as
//! `[W1 (d×m, row-major) | b1 (d) | W2 (n×d, row-major) | b2 (n)]`.
//! Partition 1 is `(W1, b1)`, partition 2 is `(W2, b2)`.

mod params;
mod snapshot;

pub use params::{init_params, InitScheme, ParamGroup, PartitionedParams};
pub use snapshot::{read_snapshot, write_snapshot, decode_snapshot, encode_snapshot};

use std::ops::Range;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Lower clamp applied to predicted probabilities before taking logarithms.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkSpec {
    /// Input dimension `m`.
    pub inputs: usize,
    /// Hidden nodes `d`.
    pub hidden: usize,
    /// Output dimension `n` (1 for sigmoid).
    pub outputs: usize,
    pub output: OutputActivation,
    /// Quadratic penalty `λ/2 ‖W‖²` on weights (not biases).
    pub l2: f64,
}

impl NetworkSpec {
    /// Binary classifier with one sigmoid output.
    pub fn binary(inputs: usize, hidden: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs: 1,
            output: OutputActivation::Sigmoid,
            l2: 0.0,
        }
    }

    pub fn softmax(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs: classes,
            output: OutputActivation::Softmax,
            l2: 0.0,
        }
    }

    /// Sigmoid for one output, softmax otherwise.
    pub fn from_dims(inputs: usize, hidden: usize, outputs: usize) -> Self {
        if outputs == 1 {
            Self::binary(inputs, hidden)
        } else {
            Self::softmax(inputs, hidden, outputs)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.hidden == 0 || self.outputs == 0 {
            return Err(Error::InvalidArgument("network dimensions must be positive".into()));
        }
        if (self.output == OutputActivation::Sigmoid) != (self.outputs == 1) {
            return Err(Error::InvalidArgument(
                "sigmoid output requires exactly one output unit".into(),
            ));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.inputs * self.hidden + self.hidden + (self.hidden + 1) * self.outputs
    }

    pub fn w1_range(&self) -> Range<usize> {
        0..self.hidden * self.inputs
    }

    pub fn b1_range(&self) -> Range<usize> {
        let s = self.hidden * self.inputs;
        s..s + self.hidden
    }

    pub fn w2_range(&self) -> Range<usize> {
        let s = self.b1_range().end;
        s..s + self.outputs * self.hidden
    }

    pub fn b2_range(&self) -> Range<usize> {
        let s = self.w2_range().end;
        s..s + self.outputs
    }

    /// `[(W1,b1), (W2,b2)]` as ranges into the flat vector.
    pub fn partitions(&self) -> [Range<usize>; 2] {
        [0..self.b1_range().end, self.w2_range().start..self.param_count()]
    }

    pub fn partition_sizes(&self) -> [usize; 2] {
        let [a, b] = self.partitions();
        [a.len(), b.len()]
    }

    /// Number of classes the model separates.
    pub fn classes(&self) -> usize {
        match self.output {
            OutputActivation::Sigmoid => 2,
            OutputActivation::Softmax => self.outputs,
        }
    }
}

/// Output probabilities: length 1 (class-1 probability) for sigmoid,
/// length `n` for softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
}

impl Prediction {
    pub fn class(&self) -> usize {
        if self.probabilities.len() == 1 {
            usize::from(self.probabilities[0] > 0.5)
        } else {
            argmax(&self.probabilities)
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-call scratch buffers for forward and backward passes.
struct Workspace {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Workspace {
    fn new(spec: &NetworkSpec) -> Self {
        Self {
            pre: vec![0.0; spec.hidden],
            hidden: vec![0.0; spec.hidden],
            out: vec![0.0; spec.outputs],
            delta_hidden: vec![0.0; spec.hidden],
        }
    }
}

fn check_theta(spec: &NetworkSpec, theta: &[f64]) {
    assert_eq!(theta.len(), spec.param_count(), "parameter vector has wrong length");
}

/// Forward pass into `ws`; leaves probabilities in `ws.out`.
fn forward_ws(spec: &NetworkSpec, theta: &[f64], x: &[f64], ws: &mut Workspace) {
    let (m, d, n) = (spec.inputs, spec.hidden, spec.outputs);
    let w1 = &theta[spec.w1_range()];
    let b1 = &theta[spec.b1_range()];
    let w2 = &theta[spec.w2_range()];
    let b2 = &theta[spec.b2_range()];
    for j in 0..d {
        let row = &w1[j * m..(j + 1) * m];
        let a = b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        ws.pre[j] = a;
        ws.hidden[j] = if a > 0.0 { a } else { 0.0 };
    }
    for k in 0..n {
        let row = &w2[k * d..(k + 1) * d];
        ws.out[k] = b2[k] + row.iter().zip(&ws.hidden).map(|(w, z)| w * z).sum::<f64>();
    }
    match spec.output {
        OutputActivation::Sigmoid => ws.out[0] = sigmoid(ws.out[0]),
        OutputActivation::Softmax => {
            let max = ws.out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for o in ws.out.iter_mut() {
                *o = (*o - max).exp();
                total += *o;
            }
            for o in ws.out.iter_mut() {
                *o /= total;
            }
        }
    }
}

fn sample_loss(spec: &NetworkSpec, probs: &[f64], y: usize) -> f64 {
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    match spec.output {
        OutputActivation::Sigmoid => {
            let p = clamp(probs[0]);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        }
        OutputActivation::Softmax => -clamp(probs[y]).ln(),
    }
}

fn l2_penalty(spec: &NetworkSpec, theta: &[f64]) -> f64 {
    if spec.l2 == 0.0 {
        return 0.0;
    }
    let sq = |r: Range<usize>| theta[r].iter().map(|w| w * w).sum::<f64>();
    0.5 * spec.l2 * (sq(spec.w1_range()) + sq(spec.w2_range()))
}

pub fn forward(params: &PartitionedParams, x: &[f64]) -> Prediction {
    forward_flat(params.spec(), params.as_slice(), x)
}

pub fn forward_flat(spec: &NetworkSpec, theta: &[f64], x: &[f64]) -> Prediction {
    check_theta(spec, theta);
    assert_eq!(x.len(), spec.inputs, "input has wrong length");
    let mut ws = Workspace::new(spec);
    forward_ws(spec, theta, x, &mut ws);
    Prediction {
        probabilities: ws.out,
    }
}

/// ReLU hidden activations `z = max(0, W1 x + b1)`.
pub fn hidden_activations(spec: &NetworkSpec, theta: &[f64], x: &[f64]) -> Vec<f64> {
    check_theta(spec, theta);
    let mut ws = Workspace::new(spec);
    forward_ws(spec, theta, x, &mut ws);
    ws.hidden
}

/// Mean cross-entropy over `indices`, plus the optional L2 penalty.
pub fn loss(spec: &NetworkSpec, theta: &[f64], data: &Dataset, indices: &[usize]) -> f64 {
    check_theta(spec, theta);
    let mut ws = Workspace::new(spec);
    let mut total = 0.0;
    for &i in indices {
        forward_ws(spec, theta, data.input(i), &mut ws);
        total += sample_loss(spec, &ws.out, data.label(i));
    }
    total / indices.len() as f64 + l2_penalty(spec, theta)
}

/// Mean loss and accuracy over the whole dataset in one pass.
pub fn evaluate(spec: &NetworkSpec, theta: &[f64], data: &Dataset) -> (f64, f64) {
    check_theta(spec, theta);
    let mut ws = Workspace::new(spec);
    let mut total = 0.0;
    let mut correct = 0usize;
    for i in 0..data.len() {
        forward_ws(spec, theta, data.input(i), &mut ws);
        let y = data.label(i);
        total += sample_loss(spec, &ws.out, y);
        let predicted = match spec.output {
            OutputActivation::Sigmoid => usize::from(ws.out[0] > 0.5),
            OutputActivation::Softmax => argmax(&ws.out),
        };
        correct += usize::from(predicted == y);
    }
    let n = data.len() as f64;
    (total / n + l2_penalty(spec, theta), correct as f64 / n)
}

pub fn accuracy(spec: &NetworkSpec, theta: &[f64], data: &Dataset) -> f64 {
    evaluate(spec, theta, data).1
}

/// Negative gradient `G̃ = -∇ L` of the mean batch loss, written into `out`.
///
/// The output-layer error uses the unclamped `ŷ - y` form. The ReLU
/// derivative at exactly zero is taken as 0.
pub fn neg_grad_into(spec: &NetworkSpec, theta: &[f64], data: &Dataset, indices: &[usize], out: &mut [f64]) {
    check_theta(spec, theta);
    assert_eq!(out.len(), theta.len());
    let (m, d, n) = (spec.inputs, spec.hidden, spec.outputs);
    let (w1r, b1r, w2r, b2r) = (spec.w1_range(), spec.b1_range(), spec.w2_range(), spec.b2_range());
    let w2 = &theta[w2r.clone()];
    out.iter_mut().for_each(|g| *g = 0.0);
    let mut ws = Workspace::new(spec);
    let mut delta_out = vec![0.0; n];

    for &i in indices {
        let x = data.input(i);
        let y = data.label(i);
        forward_ws(spec, theta, x, &mut ws);
        match spec.output {
            OutputActivation::Sigmoid => delta_out[0] = ws.out[0] - y as f64,
            OutputActivation::Softmax => {
                for k in 0..n {
                    delta_out[k] = ws.out[k] - if k == y { 1.0 } else { 0.0 };
                }
            }
        }
        ws.delta_hidden.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            let dk = delta_out[k];
            out[b2r.start + k] += dk;
            let grow = &mut out[w2r.start + k * d..w2r.start + (k + 1) * d];
            let wrow = &w2[k * d..(k + 1) * d];
            for j in 0..d {
                grow[j] += dk * ws.hidden[j];
                ws.delta_hidden[j] += wrow[j] * dk;
            }
        }
        for j in 0..d {
            if ws.pre[j] <= 0.0 {
                continue;
            }
            let dj = ws.delta_hidden[j];
            out[b1r.start + j] += dj;
            let grow = &mut out[w1r.start + j * m..w1r.start + (j + 1) * m];
            for (g, xi) in grow.iter_mut().zip(x) {
                *g += dj * xi;
            }
        }
    }

    let scale = -1.0 / indices.len() as f64;
    out.iter_mut().for_each(|g| *g *= scale);
    if spec.l2 != 0.0 {
        for r in [w1r, w2r] {
            for k in r {
                out[k] -= spec.l2 * theta[k];
            }
        }
    }
}

pub fn neg_grad(spec: &NetworkSpec, theta: &[f64], data: &Dataset, indices: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    neg_grad_into(spec, theta, data, indices, &mut out);
    out
}

/// Mean of the forward outputs over a set of parameter checkpoints.
pub fn posterior_mean_predict(checkpoints: &[PartitionedParams], x: &[f64]) -> Result<Prediction> {
    let first = checkpoints
        .first()
        .ok_or_else(|| Error::InvalidArgument("posterior mean needs at least one checkpoint".into()))?;
    let mut acc = vec![0.0; first.spec().outputs];
    for params in checkpoints {
        let p = forward(params, x);
        if p.probabilities.len() != acc.len() {
            return Err(Error::ShapeMismatch {
                expected: acc.len(),
                actual: p.probabilities.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(&p.probabilities) {
            *a += v;
        }
    }
    let n = checkpoints.len() as f64;
    Ok(Prediction {
        probabilities: acc.into_iter().map(|a| a / n).collect(),
    })
}

#[cfg(test)]
mod tests;
