//! Seedable random streams.
//!
//! Every stochastic component in the crate (data generation, minibatch
//! selection, parameter initialization, integrator noise) draws from an
//! [`RngStream`]. The generator is fixed so that CSV outputs are stable across
//! platforms and releases:
//!
//! * State transition: xoshiro256++ (Blackman & Vigna), 256 bits of state.
//! * Seeding: the 64-bit seed is expanded to the 256-bit state with SplitMix64,
//!   so a zero seed yields a well-mixed non-zero state.
//! * Uniforms: `(x >> 11) * 2^-53`, i.e. 53-bit values in `[0, 1)`.
//! * Normals: Marsaglia's polar method. Each accepted pair yields two
//!   variates; the second is cached in the stream and returned by the next
//!   call without touching the generator.
//!
//! [`RngStream::draws`] counts raw 64-bit words consumed from the generator,
//! so a cached normal does not advance it.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer, used to derive independent sub-stream seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic, single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    gen: Xoshiro256PlusPlus,
    draws: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    /// Creates a stream positioned at draw 0.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            gen: Xoshiro256PlusPlus::seed_from_u64(seed),
            draws: 0,
            spare_normal: None,
        }
    }

    /// A stream for a named purpose within one run. The sub-seed is
    /// `splitmix64(seed ^ splitmix64(tag))`, independent of how much of the
    /// parent stream has been consumed.
    pub fn substream(&self, tag: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(tag)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw 64-bit words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.gen.next_u64()
    }

    /// Uniform variate in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform integer in `[0, n)` by Lemire's multiply-and-reject method.
    ///
    /// Panics if `n == 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal variate (polar method with cached spare).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.next_normal();
        }
    }
}
