//! Training integrators over parameters `θ`, momenta `p` and thermostat
//! variables `ξ`.
//!
//! Every stepper receives a gradient source that writes the *negative*
//! minibatch gradient `G̃(θ)` for the current step, and updates momenta as
//! `p ← p + h·G̃`. The harness draws one minibatch per step before calling
//! the stepper, so all gradient evaluations inside a step share that batch.
//!
//! Splitting schemes (BAOAB, OBA, Langevin-in-layers, LOL, AdL, AdLaLa) are
//! expressed as a [`Stage`] sequence and run by one executor. A `B` kick
//! reuses the force cached by the previous kick whenever `θ` has not moved
//! since, so the trailing `B` of step `n` and the leading `B` of step `n+1`
//! share a single evaluation and every scheme costs one fresh gradient per
//! step. The evaluation that primes the very first kick is counted apart, in
//! [`DynamicsState::priming_evals`].

mod first_order;
mod maps;
mod splitting;

pub use first_order::step_first_order;
pub use maps::{ou_update, thermostat_control, thermostat_damp, thermostat_noise};
pub use splitting::{composition, is_palindromic, step_adl, step_adlala, step_langevin, step_lol, Map, Scope, Stage};

use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::prng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    SgdMomI,
    SgdMomII,
    Adam,
    Sgld,
    Baoab,
    Oba,
    Adl,
    LangevinLayers,
    Lol,
    AdLaLa,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Sgd,
        Method::SgdMomI,
        Method::SgdMomII,
        Method::Adam,
        Method::Sgld,
        Method::Baoab,
        Method::Oba,
        Method::Adl,
        Method::LangevinLayers,
        Method::Lol,
        Method::AdLaLa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgd => "SGD",
            Method::SgdMomI => "SGD_MOM_I",
            Method::SgdMomII => "SGD_MOM_II",
            Method::Adam => "ADAM",
            Method::Sgld => "SGLD",
            Method::Baoab => "BAOAB",
            Method::Oba => "OBA",
            Method::Adl => "ADL",
            Method::LangevinLayers => "LANGEVIN_LAYERS",
            Method::Lol => "LOL",
            Method::AdLaLa => "ADLALA",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Friction coefficient; infinite friction is a flag rather than a large
/// float so that `e^{-γh}` never has to be evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Friction {
    Finite(f64),
    Infinite,
}

impl Friction {
    pub fn is_infinite(self) -> bool {
        matches!(self, Friction::Infinite)
    }
}

impl FromStr for Friction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "+inf") {
            return Ok(Friction::Infinite);
        }
        t.parse::<f64>()
            .map(Friction::Finite)
            .map_err(|_| Error::Config(format!("bad friction value `{s}`")))
    }
}

impl std::fmt::Display for Friction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Friction::Finite(g) => write!(f, "{g}"),
            Friction::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Method tag plus every hyperparameter the catalog uses. Fields a method
/// does not read are ignored.
///
/// Per-partition arrays are indexed `[hidden layer, output layer]`. Methods
/// with a single `(γ, τ)` read it from both entries (set them equal); AdL
/// reads `tau[0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Stepsize (learning rate). Also the `δt` of SGD-momentum and SGLD.
    pub h: f64,
    pub gamma: [Friction; 2],
    pub tau: [f64; 2],
    /// Additive noise amplitude of the AdL `D` map.
    pub sigma_a: f64,
    /// AdL coupling `ε`.
    pub eps: f64,
    pub adam: AdamParams,
    /// SGD-momentum damping `μ`.
    pub momentum: f64,
    /// SGLD noise strength.
    pub sgld_sigma: f64,
}

impl IntegratorConfig {
    pub fn new(method: Method, h: f64) -> Self {
        Self {
            method,
            h,
            gamma: [Friction::Finite(1.0); 2],
            tau: [1e-4; 2],
            sigma_a: 0.01,
            eps: 0.1,
            adam: AdamParams::default(),
            momentum: 0.9,
            sgld_sigma: 0.01,
        }
    }

    pub fn with_gamma(mut self, gamma: Friction) -> Self {
        self.gamma = [gamma; 2];
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = [tau; 2];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        for (i, t) in self.tau.iter().enumerate() {
            if !(*t >= 0.0) {
                return bad(format!("tau{} must be >= 0, got {t}", i + 1));
            }
        }
        for (i, g) in self.gamma.iter().enumerate() {
            if let Friction::Finite(g) = g {
                if !(*g >= 0.0) {
                    return bad(format!("gamma{} must be >= 0, got {g}", i + 1));
                }
            }
        }
        if !(self.sigma_a >= 0.0) {
            return bad(format!("sigma_a must be >= 0, got {}", self.sigma_a));
        }
        if matches!(self.method, Method::Adl | Method::AdLaLa) && !(self.eps > 0.0) {
            return bad(format!("eps must be > 0 for {}, got {}", self.method, self.eps));
        }
        if !(self.sgld_sigma >= 0.0) {
            return bad(format!("sgld.sigma must be >= 0, got {}", self.sgld_sigma));
        }
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return bad("adam parameters out of range".into());
        }
        Ok(())
    }
}

/// Momenta, thermostat variables and optimizer moments for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsState {
    partitions: [Range<usize>; 2],
    /// Momenta (or the velocity `v` of SGD-momentum), laid out like `θ`.
    pub p: Vec<f64>,
    /// Thermostat variables `ξ`, one per partition. Unpartitioned AdL uses
    /// `xi[0]`.
    pub xi: [f64; 2],
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub steps: u64,
    /// Gradient evaluations made by steps, one per step for every method.
    pub grad_evals: u64,
    /// Evaluations made only to seed the force cache of a leading kick.
    pub priming_evals: u64,
    force: Vec<f64>,
    force_valid: bool,
}

impl DynamicsState {
    /// Zero momenta and thermostats for partitions that tile `0..q`.
    pub fn new(partitions: [Range<usize>; 2]) -> Self {
        assert_eq!(partitions[0].start, 0);
        assert_eq!(partitions[0].end, partitions[1].start);
        let q = partitions[1].end;
        Self {
            partitions,
            p: vec![0.0; q],
            xi: [0.0; 2],
            adam_m: Vec::new(),
            adam_v: Vec::new(),
            steps: 0,
            grad_evals: 0,
            priming_evals: 0,
            force: vec![0.0; q],
            force_valid: false,
        }
    }

    /// Single-partition state (everything in partition 1).
    pub fn unpartitioned(q: usize) -> Self {
        Self::new([0..q, q..q])
    }

    pub fn partitions(&self) -> &[Range<usize>; 2] {
        &self.partitions
    }

    pub fn partition_sizes(&self) -> [usize; 2] {
        [self.partitions[0].len(), self.partitions[1].len()]
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Drops the cached force, e.g. after `θ` was modified externally.
    pub fn invalidate_force(&mut self) {
        self.force_valid = false;
    }

    /// The most recent negative gradient, if still valid for the current `θ`.
    pub fn cached_force(&self) -> Option<&[f64]> {
        self.force_valid.then_some(self.force.as_slice())
    }

    fn evaluate<G: FnMut(&[f64], &mut [f64])>(&mut self, theta: &[f64], grad: &mut G) {
        grad(theta, &mut self.force);
        self.grad_evals += 1;
        self.force_valid = true;
    }
}

/// Advances `(θ, state)` by one step of the configured method.
pub fn step<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    match config.method {
        Method::Sgd | Method::Sgld | Method::Adam => step_first_order(config, theta, state, grad, stream),
        Method::Baoab | Method::Oba | Method::SgdMomI | Method::SgdMomII | Method::LangevinLayers => {
            step_langevin(config, theta, state, grad, stream)
        }
        Method::Adl => step_adl(config, theta, state, grad, stream),
        Method::Lol => step_lol(config, theta, state, grad, stream),
        Method::AdLaLa => step_adlala(config, theta, state, grad, stream),
    }
}
