//! Portable random numbers: SplitMix64 with Box-Muller normals.
//!
//! The stream is fully specified here so simulation traces can be reproduced
//! by any implementation: the state advances by `0x9E3779B97F4A7C15` per draw,
//! outputs go through the SplitMix64 finalizer, uniforms take the top 53 bits,
//! and normals are produced in pairs `(r cos a, r sin a)` with
//! `r = sqrt(-2 ln(1 - u1))`, `a = 2 pi u2`.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = 2.0 * PI * u2;
        self.spare = Some(r * a.sin());
        r * a.cos()
    }
}
