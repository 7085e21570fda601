//! Counter-based random streams.
//!
//! Every random draw in the simulator is addressed by
//! `(seed, stream, step, particle)`, so the values a particle sees do not
//! depend on how particles are split between workers or on the order in which
//! chunks run. A cell key is derived by chaining a 64-bit bijective mixer over
//! the four coordinates; the generator for a cell is SplitMix64 started at
//! that key.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (a bijection on `u64`).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one random cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellKey {
    pub seed: u64,
    pub stream: u64,
    pub step: u64,
    pub particle: u64,
}

impl CellKey {
    #[inline]
    pub fn hash(&self) -> u64 {
        let mut h = mix64(self.seed ^ 0x6A09_E667_F3BC_C909);
        h = mix64(h ^ self.stream.wrapping_mul(GOLDEN_GAMMA));
        h = mix64(h ^ self.step.wrapping_mul(0xD1B5_4A32_D192_ED03));
        mix64(h ^ self.particle.wrapping_mul(0xABC9_8388_FB8F_AC03))
    }

    #[inline]
    pub fn rng(&self) -> CounterRng {
        CounterRng::new(self.hash())
    }
}

/// SplitMix64 generator over a fixed key.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    #[inline]
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dest)
    }
}
