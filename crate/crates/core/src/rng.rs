//! Counter-based random streams.
//!
//! Every random draw in the simulator comes from a stream addressed by
//! `(base_seed, trial, cell, link, user, purpose)`. Streams are independent
//! of execution order, so a trial produces the same numbers on any thread
//! and under any worker count.

use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::CVector;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Kappa = 1,
    Angle = 2,
    Correlation = 3,
    Scattering = 4,
    TrainingNoise = 5,
    Probe = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trial: u64,
    pub cell: u64,
    pub link: u64,
    pub user: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Self { seed, trial: 0, cell: 0, link: 0, user: 0, purpose }
    }

    pub fn trial(mut self, trial: u64) -> Self {
        self.trial = trial;
        self
    }

    pub fn link(mut self, cell: usize, link: usize, user: usize) -> Self {
        self.cell = cell as u64;
        self.link = link as u64;
        self.user = user as u64;
        self
    }

    pub fn stream(&self) -> Stream {
        let mut state = splitmix64(self.seed ^ 0x6a09_e667_f3bc_c908);
        for word in [self.purpose as u64, self.trial, self.cell, self.link, self.user] {
            state = splitmix64(state ^ splitmix64(word.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One circularly-symmetric complex Gaussian sample with unit variance:
/// real and imaginary parts are independent `Normal(0, 1/2)`.
#[inline]
pub fn complex_gaussian(rng: &mut Stream) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// A vector of i.i.d. `CN(0, 1)` entries.
pub fn complex_gaussian_vector(rng: &mut Stream, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng))
}
