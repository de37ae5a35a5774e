//! Exact sub-flows used by the splitting schemes.

use super::Friction;
use crate::prng::RngStream;

/// Exact Ornstein-Uhlenbeck update over time `h`:
/// `p ← e^{-γh} p + √(τ(1 − e^{-2γh})) R`.
///
/// With infinite friction the momenta are redrawn, `p = √τ R`. No variates
/// are drawn when the noise coefficient is zero.
pub fn ou_update(p: &mut [f64], gamma: Friction, tau: f64, h: f64, stream: &mut RngStream) {
    match gamma {
        Friction::Infinite => {
            let c = tau.sqrt();
            if c == 0.0 {
                p.iter_mut().for_each(|v| *v = 0.0);
            } else {
                p.iter_mut().for_each(|v| *v = c * stream.next_normal());
            }
        }
        Friction::Finite(g) => {
            let decay = (-g * h).exp();
            let c = (tau * -(-2.0 * g * h).exp_m1()).sqrt();
            if c == 0.0 {
                if decay != 1.0 {
                    p.iter_mut().for_each(|v| *v *= decay);
                }
            } else {
                p.iter_mut()
                    .for_each(|v| *v = decay * *v + c * stream.next_normal());
            }
        }
    }
}

/// `C` map: `p ← e^{-h ξ} p`.
pub fn thermostat_damp(p: &mut [f64], xi: f64, h: f64) {
    let f = (-h * xi).exp();
    if f != 1.0 {
        p.iter_mut().for_each(|v| *v *= f);
    }
}

/// `D` map: `p ← p + σ √h R`.
pub fn thermostat_noise(p: &mut [f64], sigma: f64, h: f64, stream: &mut RngStream) {
    if sigma == 0.0 {
        return;
    }
    let c = sigma * h.sqrt();
    p.iter_mut().for_each(|v| *v += c * stream.next_normal());
}

/// `E` map: `ξ ← ξ + h ε (pᵀp − N τ)`, with `N = p.len()`.
pub fn thermostat_control(xi: &mut f64, p: &[f64], eps: f64, tau: f64, h: f64) {
    let kinetic: f64 = p.iter().map(|v| v * v).sum();
    *xi += h * eps * (kinetic - p.len() as f64 * tau);
}
