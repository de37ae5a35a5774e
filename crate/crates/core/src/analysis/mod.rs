//! Loss-landscape probes and thermodynamic diagnostics.
//!
//! CSV schemas:
//!
//! | artifact   | columns                   |
//! |------------|---------------------------|
//! | curve      | `alpha,loss`              |
//! | surface    | `alpha,beta,loss`         |
//! | grid       | `x,y,p1`                  |
//! | histogram  | `lower,upper,count`       |
//!
//! Open histogram bins print `-inf` / `inf` as their outer edge.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;

use crate::data::{Dataset, MinibatchSampler};
use crate::error::{Error, Result};
use crate::integrators::DynamicsState;
use crate::model::{forward, neg_grad_into, NetworkSpec, OutputActivation, ParamGroup, PartitionedParams};
use crate::prng::RngStream;

pub const DEFAULT_CURVE_POINTS: usize = 101;
pub const DEFAULT_SURFACE_POINTS: usize = 41;
pub const DEFAULT_GRID_RESOLUTION: usize = 256;

/// FNV-1a over the little-endian bytes of `theta`; identifies probe endpoints.
pub fn params_hash(theta: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in theta {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// `n` uniformly spaced points from 0 to 1, with both ends exact.
pub fn unit_grid(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { 1.0 } else { i as f64 / last }).collect()
}

/// `(1 − t) a + t b`, returning `a` exactly when `a == b`.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        a
    } else {
        (1.0 - t) * a + t * b
    }
}

fn check_shapes(reference: &[f64], others: &[&[f64]]) -> Result<()> {
    for o in others {
        if o.len() != reference.len() {
            return Err(Error::ShapeMismatch {
                expected: reference.len(),
                actual: o.len(),
            });
        }
    }
    Ok(())
}

fn check_points(n: usize, what: &str) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("{what} needs at least 2 points, got {n}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossCurve {
    pub alphas: Vec<f64>,
    pub losses: Vec<f64>,
    pub start_hash: u64,
    pub end_hash: u64,
}

impl LossCurve {
    /// Excess of the highest loss on the segment over the higher endpoint.
    pub fn barrier(&self) -> f64 {
        let max = self.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ends = self.losses[0].max(*self.losses.last().unwrap());
        max - ends
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,loss\n");
        for (a, l) in self.alphas.iter().zip(&self.losses) {
            writeln!(s, "{a},{l}").unwrap();
        }
        s
    }
}

/// Loss along `θ*(α) = (1 − α) θ₀ + α θ_f`.
pub fn interpolate_1d<F: FnMut(&[f64]) -> f64>(
    theta0: &[f64],
    theta_f: &[f64],
    mut loss_fn: F,
    n_points: usize,
) -> Result<LossCurve> {
    check_shapes(theta0, &[theta_f])?;
    check_points(n_points, "interpolate_1d")?;
    let alphas = unit_grid(n_points);
    let mut point = vec![0.0; theta0.len()];
    let losses = alphas
        .iter()
        .map(|&a| {
            for k in 0..point.len() {
                point[k] = lerp(theta0[k], theta_f[k], a);
            }
            loss_fn(&point)
        })
        .collect();
    Ok(LossCurve {
        alphas,
        losses,
        start_hash: params_hash(theta0),
        end_hash: params_hash(theta_f),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossSurface {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `losses[i][j]` at `(alphas[i], betas[j])`.
    pub losses: Vec<Vec<f64>>,
}

impl LossSurface {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,beta,loss\n");
        for (a, row) in self.alphas.iter().zip(&self.losses) {
            for (b, l) in self.betas.iter().zip(row) {
                writeln!(s, "{a},{b},{l}").unwrap();
            }
        }
        s
    }
}

/// Loss over `θ*(α, β) = β F₁(α) + (1 − β) F₂(α)` with
/// `F_j(α) = (1 − α) θ₀ + α θ_{f,j}`.
///
/// Evaluated as `(1 − α) θ₀ + α (β θ_{f,1} + (1 − β) θ_{f,2})` so that the
/// `α = 0` row and the `α = 1` corners hit their snapshots exactly.
pub fn surface_2d<F: FnMut(&[f64]) -> f64>(
    theta0: &[f64],
    theta_f1: &[f64],
    theta_f2: &[f64],
    mut loss_fn: F,
    n_alpha: usize,
    n_beta: usize,
) -> Result<LossSurface> {
    check_shapes(theta0, &[theta_f1, theta_f2])?;
    check_points(n_alpha, "surface_2d alpha grid")?;
    check_points(n_beta, "surface_2d beta grid")?;
    let alphas = unit_grid(n_alpha);
    let betas = unit_grid(n_beta);
    let q = theta0.len();
    let mut end = vec![0.0; q];
    let mut point = vec![0.0; q];
    let mut losses = vec![vec![0.0; n_beta]; n_alpha];
    for (j, &b) in betas.iter().enumerate() {
        for k in 0..q {
            end[k] = lerp(theta_f2[k], theta_f1[k], b);
        }
        for (i, &a) in alphas.iter().enumerate() {
            for k in 0..q {
                point[k] = lerp(theta0[k], end[k], a);
            }
            losses[i][j] = loss_fn(&point);
        }
    }
    Ok(LossSurface { alphas, betas, losses })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Class-1 probabilities on a cell-centred grid, `grid[row][col]` with
/// `row` indexing `y` upward and `col` indexing `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierGrid {
    pub bounds: Bounds,
    pub resolution: usize,
    pub values: Vec<Vec<f64>>,
}

impl ClassifierGrid {
    pub fn coordinate(&self, row: usize, col: usize) -> [f64; 2] {
        cell_center(&self.bounds, self.resolution, row, col)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,p1\n");
        for (r, row) in self.values.iter().enumerate() {
            for (c, p) in row.iter().enumerate() {
                let [x, y] = self.coordinate(r, c);
                writeln!(s, "{x},{y},{p}").unwrap();
            }
        }
        s
    }

    /// Binary 8-bit PGM, top row = largest `y`, white = class 1.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.resolution;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        for row in self.values.iter().rev() {
            out.extend(row.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
        }
        out
    }
}

fn cell_center(b: &Bounds, n: usize, row: usize, col: usize) -> [f64; 2] {
    let fx = (col as f64 + 0.5) / n as f64;
    let fy = (row as f64 + 0.5) / n as f64;
    [b.x_min + fx * (b.x_max - b.x_min), b.y_min + fy * (b.y_max - b.y_min)]
}

pub fn classifier_grid(params: &PartitionedParams, bounds: Bounds, resolution: usize) -> Result<ClassifierGrid> {
    let spec = params.spec();
    if spec.inputs != 2 {
        return Err(Error::InvalidArgument(format!(
            "classifier grid needs a planar model, got {} inputs",
            spec.inputs
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let class1 = match spec.output {
        OutputActivation::Sigmoid => 0,
        OutputActivation::Softmax => 1,
    };
    let values = (0..resolution)
        .into_par_iter()
        .map(|row| {
            (0..resolution)
                .map(|col| forward(params, &cell_center(&bounds, resolution, row, col)).probabilities[class1])
                .collect()
        })
        .collect();
    Ok(ClassifierGrid {
        bounds,
        resolution,
        values,
    })
}

/// `τ̂ᵢ = ‖p⁽ⁱ⁾‖² / Nᵢ` over consecutive blocks of the given sizes. Empty
/// blocks report 0.
pub fn kinetic_temperature(p: &[f64], partition_sizes: &[usize]) -> Vec<f64> {
    assert_eq!(partition_sizes.iter().sum::<usize>(), p.len(), "partition sizes must sum to q");
    let mut start = 0;
    partition_sizes
        .iter()
        .map(|&n| {
            let block = &p[start..start + n];
            start += n;
            if n == 0 {
                0.0
            } else {
                block.iter().map(|v| v * v).sum::<f64>() / n as f64
            }
        })
        .collect()
}

pub fn state_temperatures(state: &DynamicsState) -> [f64; 2] {
    let t = kinetic_temperature(&state.p, &state.partition_sizes());
    [t[0], t[1]]
}

/// Streaming per-component mean and unbiased variance (Welford).
#[derive(Clone, Debug)]
pub struct ComponentVariance {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ComponentVariance {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(&mut self.m2).zip(sample) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Arithmetic mean over components of the unbiased variances.
    pub fn mean_variance(&self) -> f64 {
        if self.count < 2 || self.m2.is_empty() {
            return 0.0;
        }
        let denom = (self.count - 1) as f64;
        self.m2.iter().map(|s| s / denom).sum::<f64>() / self.m2.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEstimate {
    pub sigma2: f64,
    /// Set when the batch is the full dataset and the noise is zero by
    /// construction.
    pub full_batch: bool,
}

/// Scalar gradient-noise variance `σ̂_G²` at fixed `θ` from `n_samples`
/// independent minibatch gradients.
pub fn estimate_gradient_noise(
    spec: &NetworkSpec,
    theta: &[f64],
    dataset: &Dataset,
    fraction: f64,
    n_samples: usize,
    stream: &mut RngStream,
) -> Result<NoiseEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n_samples}")));
    }
    let mut sampler = MinibatchSampler::new(dataset.len(), fraction)?;
    if sampler.batch_size() == dataset.len() {
        return Ok(NoiseEstimate {
            sigma2: 0.0,
            full_batch: true,
        });
    }
    let mut acc = ComponentVariance::new(theta.len());
    let mut g = vec![0.0; theta.len()];
    for _ in 0..n_samples {
        neg_grad_into(spec, theta, dataset, sampler.sample(stream), &mut g);
        acc.push(&g);
    }
    Ok(NoiseEstimate {
        sigma2: acc.mean_variance(),
        full_batch: false,
    })
}

/// `τ_eff = h σ_G² / (2γ) + τ`.
pub fn effective_temperature(h: f64, sigma2: f64, gamma: f64, tau: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "effective temperature needs gamma > 0, got {gamma}"
        )));
    }
    Ok(h * sigma2 / (2.0 * gamma) + tau)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub kinetic: [f64; 2],
    pub sigma2: f64,
    pub tau_eff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `edges.len() + 1` bins: `(-∞, e₀)`, `[e₀, e₁)`, …, `[e_last, ∞)`.
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_range(&self, k: usize) -> Range<f64> {
        let lo = if k == 0 { f64::NEG_INFINITY } else { self.edges[k - 1] };
        let hi = self.edges.get(k).copied().unwrap_or(f64::INFINITY);
        lo..hi
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lower,upper,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let r = self.bin_range(k);
            writeln!(s, "{},{},{c}", r.start, r.end).unwrap();
        }
        s
    }
}

pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.is_empty() || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be non-empty and strictly increasing".into()));
    }
    let mut counts = vec![0; edges.len() + 1];
    for v in values {
        counts[edges.partition_point(|e| e <= v)] += 1;
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
    })
}

pub fn weight_histogram(params: &PartitionedParams, group: ParamGroup, edges: &[f64]) -> Result<Histogram> {
    histogram(params.group(group), edges)
}

#[cfg(test)]
mod tests;
