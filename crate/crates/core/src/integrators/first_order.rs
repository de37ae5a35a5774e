use super::{AdamParams, DynamicsState, IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::prng::RngStream;

/// SGD, SGLD and Adam.
///
/// * SGD: `θ += h G̃`.
/// * SGLD: `v = σ √h R + h G̃`, `θ += v`.
/// * Adam: bias-corrected moment estimates of `−G̃`, constant learning rate `h`.
pub fn step_first_order<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
    stream: &mut RngStream,
) -> Result<()> {
    let h = config.h;
    match config.method {
        Method::Sgd => {
            state.evaluate(theta, grad);
            for (t, g) in theta.iter_mut().zip(&state.force) {
                *t += h * g;
            }
        }
        Method::Sgld => {
            state.evaluate(theta, grad);
            let c = config.sgld_sigma * h.sqrt();
            for (t, g) in theta.iter_mut().zip(&state.force) {
                let noise = if c == 0.0 { 0.0 } else { c * stream.next_normal() };
                *t += noise + h * g;
            }
        }
        Method::Adam => {
            state.evaluate(theta, grad);
            let AdamParams { beta1, beta2, eps } = config.adam;
            if state.adam_m.len() != theta.len() {
                state.adam_m = vec![0.0; theta.len()];
                state.adam_v = vec![0.0; theta.len()];
            }
            let t = (state.steps + 1) as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for k in 0..theta.len() {
                let g = -state.force[k];
                let m = beta1 * state.adam_m[k] + (1.0 - beta1) * g;
                let v = beta2 * state.adam_v[k] + (1.0 - beta2) * g * g;
                state.adam_m[k] = m;
                state.adam_v[k] = v;
                theta[k] -= h * (m / c1) / ((v / c2).sqrt() + eps);
            }
        }
        other => {
            return Err(Error::WrongMethod {
                method: other.name(),
                stepper: "step_first_order",
            })
        }
    }
    state.force_valid = false;
    state.steps += 1;
    Ok(())
}

/// SGD with momentum, with `state.p` holding the velocity `v` and `δt = h`.
///
/// * Type I:  `v ← μ v + δt G̃`, `θ ← θ + v`.
/// * Type II: `v ← μ v + (1 − μ) G̃`, `θ ← θ + δt v`.
pub(super) fn step_momentum<G: FnMut(&[f64], &mut [f64])>(
    config: &IntegratorConfig,
    theta: &mut [f64],
    state: &mut DynamicsState,
    grad: &mut G,
) {
    state.evaluate(theta, grad);
    let (mu, dt) = (config.momentum, config.h);
    for k in 0..theta.len() {
        let g = state.force[k];
        match config.method {
            Method::SgdMomI => {
                state.p[k] = mu * state.p[k] + dt * g;
                theta[k] += state.p[k];
            }
            _ => {
                state.p[k] = mu * state.p[k] + (1.0 - mu) * g;
                theta[k] += dt * state.p[k];
            }
        }
    }
    state.force_valid = false;
    state.steps += 1;
}
