//! Labelled classification data: synthetic planar generators, IDX (MNIST)
//! loading, and minibatch subsampling.

mod idx;
mod minibatch;
mod synthetic;

pub use idx::{encode_idx_images, encode_idx_labels, load_idx, parse_idx_images, parse_idx_labels};
pub use minibatch::{sample_minibatch, Minibatch, MinibatchSampler};
pub use synthetic::{generate_spiral, generate_trig, spiral_point, trig_point, SpiralSpec, TrigSpec};

use crate::error::{Error, Result};

/// Row-major `len × dim` inputs with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    dim: usize,
    n_classes: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        n_classes: usize,
        inputs: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("input dimension must be positive".into()));
        }
        if inputs.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch {
                expected: labels.len() * dim,
                actual: inputs.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            n_classes,
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// The first `n` rows, or everything if `n >= len`.
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            name: self.name.clone(),
            dim: self.dim,
            n_classes: self.n_classes,
            inputs: self.inputs[..n * self.dim].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Same rows with every binary label flipped.
    pub fn with_flipped_labels(&self) -> Dataset {
        let mut out = self.clone();
        for y in out.labels.iter_mut() {
            *y = self.n_classes - 1 - *y;
        }
        out
    }

    /// CSV with columns `x0..x{dim-1},label`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in 0..self.dim {
            s.push_str(&format!("x{j},"));
        }
        s.push_str("label\n");
        for i in 0..self.len() {
            for x in self.input(i) {
                s.push_str(&format!("{x},"));
            }
            s.push_str(&format!("{}\n", self.label(i)));
        }
        s
    }
}
