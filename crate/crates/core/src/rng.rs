//! Deterministic random streams.
//!
//! Every random quantity in the crate (rotation angles, projections, mixing
//! matrices, toy embeddings, shuffles) is drawn from a SplitMix64 stream, so
//! a 64-bit seed fully determines it on any platform. Uniforms take the top
//! 53 bits of each output; normals use Box–Muller on two uniforms.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const INV_2_POW_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct SeedStream {
    inner: SplitMix64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_POW_53
    }

    /// Uniform draw in `[0, 2π)`.
    pub fn angle(&mut self) -> f64 {
        self.uniform() * TAU
    }

    /// Standard normal draw. Consumes exactly two uniforms; the sine branch
    /// of Box–Muller is discarded so the stream position stays predictable.
    pub fn normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// One SplitMix64 step from `seed`: the first output of a stream seeded there.
pub fn mix(seed: u64) -> u64 {
    SeedStream::new(seed).next_u64()
}
