//! Flat `key = value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment. Later assignments win, and
//! `--set key=value` overrides are applied the same way after the file.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `method` | `ADLALA` | integrator tag |
//! | `h` | `0.1` | stepsize / learning rate |
//! | `gamma`, `gamma1`, `gamma2` | `1` | friction (`inf` allowed); `gamma` sets both |
//! | `tau`, `tau1`, `tau2` | `1e-4` | temperature; `tau` sets both |
//! | `sigma_a` | `0.01` | AdL additive noise |
//! | `eps` | `0.1` | AdL coupling |
//! | `adam.beta1`, `adam.beta2`, `adam.eps` | `0.9`, `0.999`, `1e-8` | |
//! | `sgld.sigma` | `0.01` | |
//! | `momentum.mu` | `0.9` | SGD-momentum damping |
//! | `data.kind` | `spiral` | `spiral`, `trig` or `mnist` |
//! | `data.a`, `data.b`, `data.c`, `data.p` | per kind | generator constants |
//! | `data.n_train`, `data.n_test` | `500`, `500` | total points (split evenly over classes); row caps for MNIST |
//! | `data.batch_fraction` | `0.02` | minibatch fraction |
//! | `data.mnist.train_images`, `…train_labels`, `…test_images`, `…test_labels` | | IDX paths |
//! | `model.hidden` | `20` | hidden nodes |
//! | `model.init` | `gaussian` | `gaussian`, `fan_in` or `zeros` |
//! | `model.init_sigma` | `0.01` | gaussian init std |
//! | `model.l2` | `0` | L2 coefficient on weights |
//! | `n_steps` | `10000` | |
//! | `eval_interval` | `100` | metrics cadence |
//! | `seed` | `0` | |
//! | `n_replicates` | `1` | |
//! | `checkpoint_interval` | `0` | snapshot cadence, 0 = off |
//! | `posterior_window` | `0` | trailing steps whose `eval_interval` samples feed the posterior-mean accuracy |
//! | `timing` | `false` | record wall-clock ms (breaks bitwise-identical CSVs) |
//! | `parallel` | `true` | run replicates on a worker pool |
//! | `out` | | output directory |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{generate_spiral, generate_trig, load_idx, Dataset, SpiralSpec, TrigSpec};
use crate::error::{Error, Result};
use crate::integrators::{Friction, IntegratorConfig, Method};
use crate::model::{InitScheme, NetworkSpec};
use crate::prng::RngStream;

/// Sub-stream tags derived from the run seed.
pub mod streams {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const INIT: u64 = 3;
    pub const BATCHES: u64 = 4;
    pub const NOISE: u64 = 5;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Spiral,
    Trig,
    Mnist,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MnistPaths {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub kind: DataKind,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub p: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub batch_fraction: f64,
    pub mnist: MnistPaths,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitKind {
    Gaussian,
    FanIn,
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub hidden: usize,
    pub init: InitKind,
    pub init_sigma: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub integrator: IntegratorConfig,
    pub n_steps: u64,
    pub eval_interval: u64,
    pub seed: u64,
    pub n_replicates: usize,
    pub checkpoint_interval: u64,
    pub posterior_window: u64,
    pub timing: bool,
    pub parallel: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig {
                kind: DataKind::Spiral,
                a: None,
                b: None,
                c: None,
                p: None,
                n_train: 500,
                n_test: 500,
                batch_fraction: 0.02,
                mnist: MnistPaths::default(),
            },
            model: ModelConfig {
                hidden: 20,
                init: InitKind::Gaussian,
                init_sigma: 0.01,
                l2: 0.0,
            },
            integrator: IntegratorConfig::new(Method::AdLaLa, 0.1),
            n_steps: 10_000,
            eval_interval: 100,
            seed: 0,
            n_replicates: 1,
            checkpoint_interval: 0,
            posterior_window: 0,
            timing: false,
            parallel: true,
            out: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let ic = &mut self.integrator;
        match key {
            "method" => ic.method = value.parse()?,
            "h" => ic.h = num(key, value)?,
            "gamma" => ic.gamma = [value.parse::<Friction>()?; 2],
            "gamma1" => ic.gamma[0] = value.parse()?,
            "gamma2" => ic.gamma[1] = value.parse()?,
            "tau" => ic.tau = [num(key, value)?; 2],
            "tau1" => ic.tau[0] = num(key, value)?,
            "tau2" => ic.tau[1] = num(key, value)?,
            "sigma_a" => ic.sigma_a = num(key, value)?,
            "eps" => ic.eps = num(key, value)?,
            "adam.beta1" => ic.adam.beta1 = num(key, value)?,
            "adam.beta2" => ic.adam.beta2 = num(key, value)?,
            "adam.eps" => ic.adam.eps = num(key, value)?,
            "sgld.sigma" => ic.sgld_sigma = num(key, value)?,
            "momentum.mu" => ic.momentum = num(key, value)?,
            "data.kind" => {
                self.data.kind = match value.to_ascii_lowercase().as_str() {
                    "spiral" => DataKind::Spiral,
                    "trig" => DataKind::Trig,
                    "mnist" => DataKind::Mnist,
                    _ => return Err(Error::Config(format!("unknown data.kind `{value}`"))),
                }
            }
            "data.a" => self.data.a = Some(num(key, value)?),
            "data.b" => self.data.b = Some(num(key, value)?),
            "data.c" => self.data.c = Some(num(key, value)?),
            "data.p" => self.data.p = Some(num(key, value)?),
            "data.n_train" => self.data.n_train = num(key, value)?,
            "data.n_test" => self.data.n_test = num(key, value)?,
            "data.batch_fraction" => self.data.batch_fraction = num(key, value)?,
            "data.mnist.train_images" => self.data.mnist.train_images = Some(value.into()),
            "data.mnist.train_labels" => self.data.mnist.train_labels = Some(value.into()),
            "data.mnist.test_images" => self.data.mnist.test_images = Some(value.into()),
            "data.mnist.test_labels" => self.data.mnist.test_labels = Some(value.into()),
            "model.hidden" => self.model.hidden = num(key, value)?,
            "model.init" => {
                self.model.init = match value.to_ascii_lowercase().as_str() {
                    "gaussian" => InitKind::Gaussian,
                    "fan_in" | "fanin" => InitKind::FanIn,
                    "zeros" => InitKind::Zeros,
                    _ => return Err(Error::Config(format!("unknown model.init `{value}`"))),
                }
            }
            "model.init_sigma" => self.model.init_sigma = num(key, value)?,
            "model.l2" => self.model.l2 = num(key, value)?,
            "n_steps" => self.n_steps = num(key, value)?,
            "eval_interval" => self.eval_interval = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "n_replicates" => self.n_replicates = num(key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = num(key, value)?,
            "posterior_window" => self.posterior_window = num(key, value)?,
            "timing" => self.timing = flag(key, value)?,
            "parallel" => self.parallel = flag(key, value)?,
            "out" => self.out = Some(value.into()),
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.integrator.validate()?;
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        if self.eval_interval == 0 {
            return bad("eval_interval must be at least 1".into());
        }
        if self.n_replicates == 0 {
            return bad("n_replicates must be at least 1".into());
        }
        if self.model.hidden == 0 {
            return bad("model.hidden must be at least 1".into());
        }
        if !(self.model.init_sigma >= 0.0) || !(self.model.l2 >= 0.0) {
            return bad("model.init_sigma and model.l2 must be >= 0".into());
        }
        let f = self.data.batch_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return bad(format!("data.batch_fraction must lie in (0, 1], got {f}"));
        }
        if self.data.kind != DataKind::Mnist {
            for (name, n) in [("data.n_train", self.data.n_train), ("data.n_test", self.data.n_test)] {
                if n < 2 || n % 2 != 0 {
                    return bad(format!("{name} must be a positive even total, got {n}"));
                }
            }
        } else {
            let m = &self.data.mnist;
            if m.train_images.is_none() || m.train_labels.is_none() || m.test_images.is_none() || m.test_labels.is_none() {
                return bad("mnist data needs all four data.mnist.* paths".into());
            }
        }
        Ok(())
    }

    pub fn network_spec(&self) -> NetworkSpec {
        let mut spec = match self.data.kind {
            DataKind::Mnist => NetworkSpec::softmax(784, self.model.hidden, 10),
            _ => NetworkSpec::binary(2, self.model.hidden),
        };
        spec.l2 = self.model.l2;
        spec
    }

    pub fn init_scheme(&self) -> InitScheme {
        match self.model.init {
            InitKind::Gaussian => InitScheme::Gaussian(self.model.init_sigma),
            InitKind::FanIn => InitScheme::FanInUniform,
            InitKind::Zeros => InitScheme::Zeros,
        }
    }

    pub fn spiral_spec(&self, n_total: usize) -> SpiralSpec {
        let d = SpiralSpec::default();
        SpiralSpec {
            n_per_class: n_total / 2,
            a: self.data.a.unwrap_or(d.a),
            b: self.data.b.unwrap_or(d.b),
            c: self.data.c.unwrap_or(d.c),
            p: self.data.p.unwrap_or(d.p),
        }
    }

    pub fn trig_spec(&self, n_total: usize) -> TrigSpec {
        let d = TrigSpec::default();
        TrigSpec {
            n_per_class: n_total / 2,
            a: self.data.a.unwrap_or(d.a),
            b: self.data.b.unwrap_or(d.b),
            c: self.data.c.unwrap_or(d.c),
        }
    }

    /// Train and test sets. Synthetic sets come from independent sub-streams
    /// of the seed, so the test set is fixed for a given seed.
    pub fn build_data(&self) -> Result<(Dataset, Dataset)> {
        let root = RngStream::new(self.seed);
        let (n_train, n_test) = (self.data.n_train, self.data.n_test);
        match self.data.kind {
            DataKind::Spiral => Ok((
                generate_spiral(&self.spiral_spec(n_train), &mut root.substream(streams::TRAIN_DATA))?,
                generate_spiral(&self.spiral_spec(n_test), &mut root.substream(streams::TEST_DATA))?,
            )),
            DataKind::Trig => Ok((
                generate_trig(&self.trig_spec(n_train), &mut root.substream(streams::TRAIN_DATA))?,
                generate_trig(&self.trig_spec(n_test), &mut root.substream(streams::TEST_DATA))?,
            )),
            DataKind::Mnist => {
                let m = &self.data.mnist;
                let cap = |d: Dataset, n: usize| if n > 0 && n < d.len() { d.head(n) } else { d };
                let train = load_idx(m.train_images.as_ref().unwrap(), m.train_labels.as_ref().unwrap())?;
                let test = load_idx(m.test_images.as_ref().unwrap(), m.test_labels.as_ref().unwrap())?;
                Ok((cap(train, n_train), cap(test, n_test)))
            }
        }
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let ic = &self.integrator;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("method", ic.method.to_string());
        kv("h", ic.h.to_string());
        kv("gamma1", ic.gamma[0].to_string());
        kv("gamma2", ic.gamma[1].to_string());
        kv("tau1", ic.tau[0].to_string());
        kv("tau2", ic.tau[1].to_string());
        kv("sigma_a", ic.sigma_a.to_string());
        kv("eps", ic.eps.to_string());
        kv("adam.beta1", ic.adam.beta1.to_string());
        kv("adam.beta2", ic.adam.beta2.to_string());
        kv("adam.eps", ic.adam.eps.to_string());
        kv("sgld.sigma", ic.sgld_sigma.to_string());
        kv("momentum.mu", ic.momentum.to_string());
        let kind = match self.data.kind {
            DataKind::Spiral => "spiral",
            DataKind::Trig => "trig",
            DataKind::Mnist => "mnist",
        };
        kv("data.kind", kind.into());
        for (k, v) in [("data.a", self.data.a), ("data.b", self.data.b), ("data.c", self.data.c), ("data.p", self.data.p)] {
            if let Some(v) = v {
                kv(k, v.to_string());
            }
        }
        kv("data.n_train", self.data.n_train.to_string());
        kv("data.n_test", self.data.n_test.to_string());
        kv("data.batch_fraction", self.data.batch_fraction.to_string());
        let m = &self.data.mnist;
        for (k, v) in [
            ("data.mnist.train_images", &m.train_images),
            ("data.mnist.train_labels", &m.train_labels),
            ("data.mnist.test_images", &m.test_images),
            ("data.mnist.test_labels", &m.test_labels),
        ] {
            if let Some(p) = v {
                kv(k, p.display().to_string());
            }
        }
        kv("model.hidden", self.model.hidden.to_string());
        let init = match self.model.init {
            InitKind::Gaussian => "gaussian",
            InitKind::FanIn => "fan_in",
            InitKind::Zeros => "zeros",
        };
        kv("model.init", init.into());
        kv("model.init_sigma", self.model.init_sigma.to_string());
        kv("model.l2", self.model.l2.to_string());
        kv("n_steps", self.n_steps.to_string());
        kv("eval_interval", self.eval_interval.to_string());
        kv("seed", self.seed.to_string());
        kv("n_replicates", self.n_replicates.to_string());
        kv("checkpoint_interval", self.checkpoint_interval.to_string());
        kv("posterior_window", self.posterior_window.to_string());
        kv("timing", self.timing.to_string());
        kv("parallel", self.parallel.to_string());
        if let Some(o) = &self.out {
            kv("out", o.display().to_string());
        }
        s
    }
}
