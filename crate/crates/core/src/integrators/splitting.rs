//! Splitting compositions and their executor.

use std::ops::Range;

use super::first_order::step_momentum;
use super::maps::{ou_update, thermostat_control, thermostat_damp, thermostat_noise};
use super::{DynamicsState, Friction, IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::prng::RngStream;

/// Which parameters a map acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    All,
    /// Partition 1: `(W1, b1)`.
    Hidden,
    /// Partition 2: `(W2, b2)`.
    Output,
}

/// One sub-flow, run for `fraction · h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Map {
    /// `B`: `p += f h G̃(θ)`.
    Kick(f64),
    /// `A`: `θ += f h p`.
    Drift(f64),
    /// `O`: exact OU with the scope's `(γ, τ)`.
    Ou(f64),
    /// `C`: `p ← e^{-f h ξ} p`.
    Damp(f64),
    /// `D`: `p += σ_A √(f h) R`.
    Noise(f64),
    /// `E`: `ξ += f h ε (‖p‖² − N τ)`.
    Control(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Apply(Scope, Map),
    /// Partition-local sequences acting on disjoint parameter blocks.
    Parallel(Vec<(Scope, Vec<Map>)>),
}

/// The map sequence of a splitting method, or `None` for methods that are
/// not splittings.
pub fn composition(method: Method) -> Option<Vec<Stage>> {
    use Map::*;
    use Stage::Apply;
    let all = |m| Apply(Scope::All, m);
    let seq = match method {
        Method::Baoab | Method::LangevinLayers | Method::Lol => vec![
            all(Kick(0.5)),
            all(Drift(0.5)),
            all(Ou(1.0)),
            all(Drift(0.5)),
            all(Kick(0.5)),
        ],
        Method::Oba => vec![all(Ou(1.0)), all(Kick(1.0)), all(Drift(1.0))],
        Method::Adl => vec![
            all(Kick(0.5)),
            all(Drift(0.5)),
            all(Damp(0.5)),
            all(Noise(0.5)),
            all(Control(1.0)),
            all(Noise(0.5)),
            all(Damp(0.5)),
            all(Drift(0.5)),
            all(Kick(0.5)),
        ],
        Method::AdLaLa => vec![
            all(Kick(0.5)),
            all(Drift(0.5)),
            Stage::Parallel(vec![
                (
                    Scope::Hidden,
                    vec![Damp(0.5), Noise(0.5), Control(1.0), Noise(0.5), Damp(0.5)],
                ),
                (Scope::Output, vec![Ou(1.0)]),
            ]),
            all(Drift(0.5)),
            all(Kick(0.5)),
        ],
        _ => return None,
    };
    Some(seq)
}

/// True when the stage list reads the same reversed and every
/// partition-local block is itself a palindrome.
pub fn is_palindromic(stages: &[Stage]) -> bool {
    let n = stages.len();
    (0..n).all(|i| stages[i] == stages[n - 1 - i])
        && stages.iter().all(|s| match s {
            Stage::Apply(..) => true,
            Stage::Parallel(blocks) => blocks.iter().all(|(_, maps)| {
                let k = maps.len();
                (0..k).all(|i| maps[i] == maps[k - 1 - i])
            }),
        })
}

/// Per-scope thermostat parameters resolved from the config.
struct ScopeParams {
    range: Range<usize>,
    gamma: Option<Friction>,
    tau: f64,
    xi_index: usize,
}

fn resolve(scope: Scope, state: &DynamicsState, config: &IntegratorConfig) -> ScopeParams {
    let parts = state.partitions();
    match scope {
        Scope::All => ScopeParams {
            range: 0..state.len(),
            gamma: None,
            tau: config.tau[0],
            xi_index: 0,
        },
        Scope::Hidden => ScopeParams {
            range: parts[0].clone(),
            gamma: Some(config.gamma[0]),
            tau: config.tau[0],
            xi_index: 0,
        },
        Scope::Output => ScopeParams {
            range: parts[1].clone(),
            gamma: Some(config.gamma[1]),
            tau: config.tau[1],
            xi_index: 1,
        },
    }
}

fn apply<G: FnMut(&[f64], &mut [f64])>(
    scope: Scope,
    map: Map,
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) {
    let h = config.h;
    let sp = resolve(scope, state, config);
    match map {
        Map::Kick(f) => {
            if !state.force_valid {
                state.evaluate(theta, grad);
            }
            let dt = f * h;
            for k in sp.range {
                state.p[k] += dt * state.force[k];
            }
        }
        Map::Drift(f) => {
            let dt = f * h;
            for k in sp.range {
                theta[k] += dt * state.p[k];
            }
            state.force_valid = false;
        }
        Map::Ou(f) => match sp.gamma {
            Some(gamma) => ou_update(&mut state.p[sp.range], gamma, sp.tau, f * h, stream),
            None => {
                // Global O: each partition with its own (γᵢ, τᵢ).
                for i in 0..2 {
                    let r = state.partitions()[i].clone();
                    ou_update(&mut state.p[r], config.gamma[i], config.tau[i], f * h, stream);
                }
            }
        },
        Map::Damp(f) => thermostat_damp(&mut state.p[sp.range], state.xi[sp.xi_index], f * h),
        Map::Noise(f) => thermostat_noise(&mut state.p[sp.range], config.sigma_a, f * h, stream),
        Map::Control(f) => {
            let mut xi = state.xi[sp.xi_index];
            thermostat_control(&mut xi, &state.p[sp.range], config.eps, sp.tau, f * h);
            state.xi[sp.xi_index] = xi;
        }
    }
}

fn run<G: FnMut(&[f64], &mut [f64])>(
    stages: &[Stage],
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) {
    if matches!(stages.first(), Some(Stage::Apply(_, Map::Kick(_)))) && !state.force_valid {
        state.evaluate(theta, grad);
        state.grad_evals -= 1;
        state.priming_evals += 1;
    }
    for stage in stages {
        match stage {
            Stage::Apply(scope, map) => apply(*scope, *map, config, theta, state, grad, stream),
            Stage::Parallel(blocks) => {
                for (scope, maps) in blocks {
                    for map in maps {
                        apply(*scope, *map, config, theta, state, grad, stream);
                    }
                }
            }
        }
    }
    state.steps += 1;
}

fn require(config: &IntegratorConfig, allowed: &[Method], stepper: &'static str) -> Result<()> {
    if allowed.contains(&config.method) {
        Ok(())
    } else {
        Err(Error::WrongMethod {
            method: config.method.name(),
            stepper,
        })
    }
}

/// BAOAB, OBA, Langevin-in-layers and SGD with momentum (types I and II).
///
/// BAOAB and Langevin-in-layers are the same scheme: the `O` step uses
/// `(γᵢ, τᵢ)` per partition.
pub fn step_langevin<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    require(
        config,
        &[Method::Baoab, Method::Oba, Method::LangevinLayers, Method::SgdMomI, Method::SgdMomII],
        "step_langevin",
    )?;
    if matches!(config.method, Method::SgdMomI | Method::SgdMomII) {
        step_momentum(config, theta, state, grad);
        return Ok(());
    }
    let stages = composition(config.method).expect("splitting method");
    run(&stages, config, theta, state, grad, stream);
    Ok(())
}

/// Unpartitioned Adaptive Langevin, `B A C D E D C A B`, one `ξ` for all
/// parameters with `N = q` and target `tau[0]`.
pub fn step_adl<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    require(config, &[Method::Adl], "step_adl")?;
    run(&composition(Method::Adl).unwrap(), config, theta, state, grad, stream);
    Ok(())
}

/// Partitioned BAOAB with infinite friction on the output layer: its `O`
/// step is a full refresh `p⁽²⁾ = √τ₂ R`, and zero when `τ₂ = 0`.
/// `gamma[1]` is ignored.
pub fn step_lol<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    require(config, &[Method::Lol], "step_lol")?;
    let mut effective = *config;
    effective.gamma[1] = Friction::Infinite;
    run(&composition(Method::Lol).unwrap(), &effective, theta, state, grad, stream);
    Ok(())
}

/// AdL on the hidden layer, Langevin on the output layer:
/// `B A [C D E D C]₁ [O]₂ A B`. `E` targets `N₁ τ₁` with `ξ⁽¹⁾ = xi[0]`;
/// `O` uses `(γ₂, τ₂)`.
pub fn step_adlala<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    require(config, &[Method::AdLaLa], "step_adlala")?;
    run(&composition(Method::AdLaLa).unwrap(), config, theta, state, grad, stream);
    Ok(())
}
