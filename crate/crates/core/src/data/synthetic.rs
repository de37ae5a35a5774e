//! Planar two-class generators.
//!
//! Spiral arm for class 0, with `s = t^p`:
//!
//! ```text
//! x1 = a s cos(2 b s π) + c N(0,1)
//! x2 = a s sin(2 b s π) + c N(0,1)
//! ```
//!
//! Class 1 shifts the trig argument by π. The trigonometric set uses
//! `x1 = a t`, `x2 = cos(b t π) + c N(0,1)` for class 0 and `sin` for class 1.
//! In both generators `t ~ U(0,1)` and rows are shuffled after generation.

use std::f64::consts::PI;

use super::Dataset;
use crate::error::{Error, Result};
use crate::prng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpiralSpec {
    pub n_per_class: usize,
    pub a: f64,
    /// Number of turns.
    pub b: f64,
    /// Noise standard deviation.
    pub c: f64,
    /// Radial exponent.
    pub p: f64,
}

impl Default for SpiralSpec {
    fn default() -> Self {
        Self {
            n_per_class: 250,
            a: 2.0,
            b: 2.0,
            c: 0.02,
            p: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigSpec {
    pub n_per_class: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for TrigSpec {
    fn default() -> Self {
        Self {
            n_per_class: 500,
            a: 6.0,
            b: 1.0,
            c: 0.02,
        }
    }
}

fn check(n_per_class: usize, c: f64) -> Result<()> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be positive".into()));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise std must be >= 0, got {c}")));
    }
    Ok(())
}

/// Spiral point for parameter `t` and class label, with the standard-normal
/// draws supplied explicitly.
pub fn spiral_point(spec: &SpiralSpec, t: f64, class: usize, noise: [f64; 2]) -> [f64; 2] {
    let s = t.powf(spec.p);
    let shift = if class == 0 { 0.0 } else { PI };
    let arg = 2.0 * spec.b * s * PI + shift;
    [
        spec.a * s * arg.cos() + spec.c * noise[0],
        spec.a * s * arg.sin() + spec.c * noise[1],
    ]
}

pub fn trig_point(spec: &TrigSpec, t: f64, class: usize, noise: f64) -> [f64; 2] {
    let arg = spec.b * t * PI;
    let wave = if class == 0 { arg.cos() } else { arg.sin() };
    [spec.a * t, wave + spec.c * noise]
}

fn assemble(name: String, rows: Vec<([f64; 2], usize)>, stream: &mut RngStream) -> Dataset {
    let mut rows = rows;
    for i in (1..rows.len()).rev() {
        let j = stream.next_below(i as u64 + 1) as usize;
        rows.swap(i, j);
    }
    let labels = rows.iter().map(|r| r.1).collect();
    let inputs = rows.iter().flat_map(|r| r.0).collect();
    Dataset::new(name, 2, 2, inputs, labels).expect("planar rows are well formed")
}

pub fn generate_spiral(spec: &SpiralSpec, stream: &mut RngStream) -> Result<Dataset> {
    check(spec.n_per_class, spec.c)?;
    let mut rows = Vec::with_capacity(2 * spec.n_per_class);
    for class in 0..2 {
        for _ in 0..spec.n_per_class {
            let t = stream.next_uniform();
            let noise = [stream.next_normal(), stream.next_normal()];
            rows.push((spiral_point(spec, t, class, noise), class));
        }
    }
    Ok(assemble(format!("spiral(b={})", spec.b), rows, stream))
}

pub fn generate_trig(spec: &TrigSpec, stream: &mut RngStream) -> Result<Dataset> {
    check(spec.n_per_class, spec.c)?;
    let mut rows = Vec::with_capacity(2 * spec.n_per_class);
    for class in 0..2 {
        for _ in 0..spec.n_per_class {
            let t = stream.next_uniform();
            let noise = stream.next_normal();
            rows.push((trig_point(spec, t, class, noise), class));
        }
    }
    Ok(assemble(format!("trig(a={})", spec.a), rows, stream))
}
