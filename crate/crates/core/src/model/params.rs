use super::NetworkSpec;
use crate::error::{Error, Result};
use crate::prng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitScheme {
    Zeros,
    /// Every parameter drawn as `σ · N(0,1)`.
    Gaussian(f64),
    /// `U(-1/√N_in, 1/√N_in)` per layer (weights and biases), where `N_in`
    /// is the number of inputs to the layer.
    FanInUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    W1,
    B1,
    W2,
    B2,
}

impl std::str::FromStr for ParamGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "w1" => Ok(Self::W1),
            "b1" => Ok(Self::B1),
            "w2" => Ok(Self::W2),
            "b2" => Ok(Self::B2),
            _ => Err(Error::InvalidArgument(format!("unknown parameter group `{s}`"))),
        }
    }
}

/// Flat parameter vector tied to its network shape.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedParams {
    spec: NetworkSpec,
    values: Vec<f64>,
}

impl PartitionedParams {
    pub fn zeros(spec: NetworkSpec) -> Self {
        Self {
            values: vec![0.0; spec.param_count()],
            spec,
        }
    }

    pub fn from_flat(spec: NetworkSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::ShapeMismatch {
                expected: spec.param_count(),
                actual: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn from_parts(spec: NetworkSpec, w1: &[f64], b1: &[f64], w2: &[f64], b2: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.param_count());
        for (part, range) in [
            (w1, spec.w1_range()),
            (b1, spec.b1_range()),
            (w2, spec.w2_range()),
            (b2, spec.b2_range()),
        ] {
            if part.len() != range.len() {
                return Err(Error::ShapeMismatch {
                    expected: range.len(),
                    actual: part.len(),
                });
            }
            values.extend_from_slice(part);
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn group(&self, group: ParamGroup) -> &[f64] {
        let r = match group {
            ParamGroup::W1 => self.spec.w1_range(),
            ParamGroup::B1 => self.spec.b1_range(),
            ParamGroup::W2 => self.spec.w2_range(),
            ParamGroup::B2 => self.spec.b2_range(),
        };
        &self.values[r]
    }

    pub fn w1(&self) -> &[f64] {
        self.group(ParamGroup::W1)
    }

    pub fn b1(&self) -> &[f64] {
        self.group(ParamGroup::B1)
    }

    pub fn w2(&self) -> &[f64] {
        self.group(ParamGroup::W2)
    }

    pub fn b2(&self) -> &[f64] {
        self.group(ParamGroup::B2)
    }

    /// Partition `i` (0 = hidden layer, 1 = output layer).
    pub fn partition(&self, i: usize) -> &[f64] {
        &self.values[self.spec.partitions()[i].clone()]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn init_params(spec: NetworkSpec, scheme: InitScheme, stream: &mut RngStream) -> Result<PartitionedParams> {
    spec.validate()?;
    let mut params = PartitionedParams::zeros(spec);
    match scheme {
        InitScheme::Zeros => {}
        InitScheme::Gaussian(sigma) => {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidArgument(format!("init sigma must be >= 0, got {sigma}")));
            }
            for v in params.values.iter_mut() {
                *v = sigma * stream.next_normal();
            }
        }
        InitScheme::FanInUniform => {
            let [layer1, layer2] = spec.partitions();
            for (range, fan_in) in [(layer1, spec.inputs), (layer2, spec.hidden)] {
                let bound = 1.0 / (fan_in as f64).sqrt();
                for v in &mut params.values[range] {
                    *v = bound * (2.0 * stream.next_uniform() - 1.0);
                }
            }
        }
    }
    Ok(params)
}
