//! Deterministic seeding for every randomized structure.
//!
//! Each structure draws from its own xoshiro256++ stream, seeded from the
//! problem seed combined with a per-structure salt.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

pub const SALT_RESERVOIR: u64 = 0x5245_5345_5256_4f49;
pub const SALT_FILTER: u64 = 0x4649_4c54_4552_0001;
pub const SALT_SKETCH: u64 = 0x534b_4554_4348_0002;
pub const SALT_WORKLOAD_IDS: u64 = 0x574c_4f41_4449_4453;
pub const SALT_WORKLOAD_PARAMS: u64 = 0x574c_5041_5241_4d53;

/// Builds the generator for `(seed, salt)`.
pub fn seeded(seed: u64, salt: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed ^ salt.rotate_left(17).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform draw in `(0, 1]`, safe to pass to `ln`.
#[inline]
pub(crate) fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rand::Rng::random::<f64>(rng)
}

/// Number of failures before the first success of a Bernoulli(`p`) process.
#[inline]
pub(crate) fn geometric_skip<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let skip = (open_unit(rng).ln() / (1.0 - p).ln()).floor();
    if skip >= u64::MAX as f64 {
        u64::MAX
    } else {
        skip as u64
    }
}

/// An RNG wrapper that counts 32/64-bit draws.
#[derive(Debug, Clone)]
pub struct CountingRng<R> {
    inner: R,
    draws: u64,
}

impl<R> CountingRng<R> {
    pub fn new(inner: R) -> Self {
        CountingRng { inner, draws: 0 }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

impl<R: RngCore> RngCore for CountingRng<R> {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.draws += dst.len().div_ceil(8) as u64;
        self.inner.fill_bytes(dst)
    }
}
